//! Ingests a small pulsar-style CSV and codes it with the shipped quartile
//! coding spec, printing the coded response categories per case.

use std::path::Path;

use mlc::dataprep::{apply_coding, ingest_reader, CodingSpec, ColumnSpec, LabelSpec, Schema};

const CSV: &str = "\
ip_mean,ip_sd,ip_kurtosis,ip_skewness,class
140.56,55.68,-0.23,-0.70,0
102.51,58.88,0.47,-0.52,0
103.02,39.34,0.32,1.05,0
136.75,57.18,-0.07,-0.64,0
88.73,40.67,0.60,1.12,0
99.37,41.57,1.55,4.15,1
27.77,28.67,5.77,37.42,1
53.70,34.79,2.89,10.24,1
";

fn main() -> mlc::Result<()> {
    let names = ["ip_mean", "ip_sd", "ip_kurtosis", "ip_skewness"];
    let schema = Schema {
        has_header: true,
        file_columns: None,
        features: names.iter().map(|n| ColumnSpec { name: n.to_string(), kind: Default::default() }).collect(),
        label: LabelSpec { column: "class".into(), class1: vec!["1".into()], class2: vec!["0".into()] },
        id_column: None,
    };
    let table = ingest_reader(CSV.as_bytes(), &schema)?;
    let spec = CodingSpec::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("data/pulsar_table2.json"))?;
    let (responses, report) = apply_coding(&table, &spec)?;

    for rule in &report.rules {
        println!("{:<12} negate={:<5} {:?}", rule.feature, rule.negate, rule.rule);
    }
    println!("\n{:>4} {:>7}  {}", "case", "class", names.join(" "));
    for ((id, label), codes) in responses.case_ids.iter().zip(&responses.class_labels).zip(&responses.codes) {
        let codes: Vec<String> = codes.iter().map(|c| format!("{c:>w$}", w = 7)).collect();
        println!("{id:>4} {label:>7}  {}", codes.join(" "));
    }
    Ok(())
}
