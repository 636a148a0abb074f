//! Routes cases to the algorithm or to human review using an MLC
//! certificate, one at a time and as a CSV batch.

use mlc::gate::{gate_case, gate_csv, MlcCertificate};
use mlc::ClassLabel;

fn main() -> mlc::Result<()> {
    let mortality = MlcCertificate::new("sapsii-mortality", 0.43, 0.78, 0.98);
    let pulsar = MlcCertificate::new("htru2-pulsar", 0.12, 0.32, 0.98);

    for (name, cert, raw, predicted) in [
        ("patient predicted alive", &mortality, 0.80, ClassLabel::Class2),
        ("patient predicted dead", &mortality, 0.80, ClassLabel::Class1),
        ("candidate predicted non-pulsar", &pulsar, 0.10, ClassLabel::Class2),
    ] {
        let d = gate_case(name, raw, predicted, cert);
        println!(
            "{name}: raw {raw:+.2}, oriented {:+.2} vs MLC {:.2} -> {:?}",
            d.oriented_cdi, d.threshold, d.verdict
        );
    }

    let batch = "case_id,raw_cdi,predicted_class\n1,-0.40,class1\n2,0.90,class2\n3,0.30,class2\n4,-0.50,class2\n";
    println!("\nbatch:");
    gate_csv(batch.as_bytes(), &pulsar, std::io::stdout().lock())?;
    Ok(())
}
