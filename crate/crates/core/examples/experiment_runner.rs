//! Drives the config-based runner in-process and prints the CSV report.

use schatten_lab::runner::{render, run, ExperimentConfig, ReportFormat};

const CONFIG: &str = r#"
experiment = "estimate"
seed = 1

[instance]
max_dim = 4
budget = 200

[[estimate]]
objective = "eq1-plus"
p = 1.0
q = [0.5, 0.75]

[[estimate]]
objective = "rx-probe"
alpha = [0.5, 3.0]
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = ExperimentConfig::from_toml(CONFIG)?;
    let report = run(&config, 1)?;
    println!("{}", render(&report, ReportFormat::Csv)?);
    eprintln!("exit code would be {}", report.exit_code());
    Ok(())
}
