//! hesslab: experiment front end for the m-Hessian laboratory.
//!
//! Exit status: 0 when every asserted criterion in the run passes,
//! 1 when a criterion fails, 2 for usage errors, 3 for numerical
//! failures (partial reports are kept).

use hesslab_cli::{config, suites};
use hesslab_core::error::Error;

use config::RunConfig;

const USAGE: &str = "\
usage: hesslab <command> [--flag value]...

commands:
  verify         --suite all|cones|brute|quadratic|radial|integrability|
                         torus|teps|comparison|stability|sublevel|garding
                 --samples N --seed S
  solve          --n N --m M --f SPEC --phi SPEC --grid S --domain box|ball
                 --extent R --tol T
  torus          --n N --m M --f SPEC --grid S --tol T
  capacity       --n N --m M --grid S --r-sweep a,b,c --p-sweep ...
  stability      --n N --m M --q Q --delta-sweep a:b:step --grid S
  integrability  --n N --m M --q-sweep lo:hi:step
  regularity     --n N --m M --grid S

common flags:
  --out DIR      report directory (default hesslab-out)
  --config FILE  flat key=value file; flags win on conflict
  --threads K    worker pool size (or HESSLAB_THREADS)
  --seed S       64-bit seed; fixed seed gives byte-identical reports

field constructors for --f / --phi:
  const:c  quad:c  radial:G  radial:log  bump:a,r  sing:a";

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--help" || a == "-h") || args.is_empty() {
        println!("{USAGE}");
        std::process::exit(if args.is_empty() { 2 } else { 0 });
    }
    let cfg = match RunConfig::from_args(&args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("hesslab: {e}");
            eprintln!("{USAGE}");
            std::process::exit(2);
        }
    };
    match suites::run(&cfg) {
        Ok(reports) => {
            if let Err(e) = std::fs::create_dir_all(&cfg.out) {
                eprintln!("hesslab: cannot create {}: {e}", cfg.out.display());
                std::process::exit(3);
            }
            let mut all_pass = true;
            for report in &reports {
                if let Err(e) = report.write_to(&cfg.out) {
                    eprintln!("hesslab: cannot write report: {e}");
                    std::process::exit(3);
                }
                for line in &report.summaries {
                    println!(
                        "{} {} {} {}",
                        if line.pass { "PASS" } else { "FAIL" },
                        line.criterion,
                        line.measured,
                        line.bound
                    );
                }
                all_pass &= report.all_pass();
            }
            std::process::exit(if all_pass { 0 } else { 1 });
        }
        Err(Error::Domain(msg)) => {
            eprintln!("hesslab: {msg}");
            std::process::exit(2);
        }
        Err(e) => {
            eprintln!("hesslab: {e}");
            std::process::exit(3);
        }
    }
}
