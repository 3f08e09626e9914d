//! Writes every encoding of an instance file into a directory:
//! `<stem>.smt2`, `<stem>.lp`, `<stem>.naive.mzn`, `<stem>.naive.dzn`,
//! `<stem>.cumulative.mzn` and `<stem>.cumulative.dzn`.
//!
//! `cargo run --example encode_all -- tests/fixtures/instance_b.json out/`

use std::fs;
use std::path::PathBuf;

use wwtpp::encoders::{
    encode_lp, encode_minizinc_cumulative, encode_minizinc_naive, encode_smtlib, Objective,
    SmtOptions,
};
use wwtpp::model::read_instance;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let input = PathBuf::from(args.next().ok_or("usage: encode_all INSTANCE OUTDIR")?);
    let outdir = PathBuf::from(args.next().ok_or("usage: encode_all INSTANCE OUTDIR")?);
    let instance = read_instance(&fs::read_to_string(&input)?)?;
    let stem = input.file_stem().ok_or("instance path has no file name")?;
    let stem = stem.to_string_lossy();
    fs::create_dir_all(&outdir)?;

    let mut outputs = vec![
        ("smt2", encode_smtlib(&instance, &SmtOptions::default())?),
        ("lp", encode_lp(&instance, Objective::None)?),
    ];
    let naive = encode_minizinc_naive(&instance)?;
    outputs.push(("naive.mzn", naive.model));
    outputs.push(("naive.dzn", naive.data));
    match encode_minizinc_cumulative(&instance) {
        Ok(cumulative) => {
            outputs.push(("cumulative.mzn", cumulative.model));
            outputs.push(("cumulative.dzn", cumulative.data));
        }
        Err(e) => eprintln!("skipping cumulative model: {e}"),
    }
    for (ext, text) in outputs {
        let path = outdir.join(format!("{stem}.{ext}"));
        fs::write(&path, text)?;
        println!("{}", path.display());
    }
    Ok(())
}
