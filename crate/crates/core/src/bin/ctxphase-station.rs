//! A standalone measuring station speaking the line protocol on
//! stdin/stdout. Usage: `ctxphase-station --side a|b --policy z|x|random --seed N`.

use std::io::{self, BufWriter};
use std::process::ExitCode;

use ctxphase::stations::{detach_inherited_descriptors, run_station, Policy};
use ctxphase::Side;

fn parse() -> Result<(Side, Policy, u64), String> {
    let mut side = None;
    let mut policy = None;
    let mut seed = None;
    let mut args = std::env::args().skip(1);
    while let Some(flag) = args.next() {
        let value = args.next().ok_or_else(|| format!("{flag} needs a value"))?;
        match flag.as_str() {
            "--side" => side = Side::from_token(&value),
            "--policy" => policy = Policy::from_token(&value),
            "--seed" => seed = value.parse().ok(),
            _ => return Err(format!("unknown flag {flag}")),
        }
    }
    Ok((
        side.ok_or("missing or invalid --side")?,
        policy.ok_or("missing or invalid --policy")?,
        seed.ok_or("missing or invalid --seed")?,
    ))
}

fn main() -> ExitCode {
    let (side, policy, seed) = match parse() {
        Ok(v) => v,
        Err(e) => {
            eprintln!("usage error: {e}");
            return ExitCode::from(2);
        }
    };
    detach_inherited_descriptors();
    let stdin = io::stdin().lock();
    let stdout = BufWriter::new(io::stdout().lock());
    match run_station(stdin, stdout, io::stderr(), side, policy, seed) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
    }
}
