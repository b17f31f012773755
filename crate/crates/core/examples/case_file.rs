//! Runs a case file through the same path as `kl certify`, writing the
//! report and field dumps to a temporary directory.

use kl_core::cli::{parse_str, run_case, Command};

fn main() -> kl_core::Result<()> {
    let text = "\
model = plate
grid.n = 17
material.E = 1
material.nu = 0.3
material.h = 0.1
loads.P = gaussian
loads.P.amplitude = 1e-4
loads.P.width = 0.15
";
    let cfg = parse_str(text, std::path::Path::new("."))?;
    let out = std::env::temp_dir().join("kl-case-example");
    let o = run_case(Command::Certify, &cfg, &out, true)?;
    println!("exit status {}, verdict {:?}", o.exit, o.report.verdict);
    println!("report at {}", o.report_path.display());
    println!("fields: {}", o.report.fields.join(", "));
    Ok(())
}
