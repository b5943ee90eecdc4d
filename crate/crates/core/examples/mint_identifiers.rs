//! Identifier minting: file paths, run directories, people and DOIs.

use fairprov::identity::{self, BaseIri, RelPath};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = BaseIri::new("https://purl.org/robovast/datasets/navigation-demo")?;

    let bag = RelPath::new(["configs", "c_0003", "runs", "07", "rosbag", "rosbag_0.mcap"])?;
    println!("{}", identity::mint_from_path(&base, &bag));
    let odd = RelPath::new(["inputs", "map #2 (v1).yaml"])?;
    println!("{}", identity::mint_from_path(&base, &odd));

    let run = RelPath::new(["configs", "c_0003", "runs", "07"])?;
    println!("{}", identity::run_identifier(&base, &run));
    println!("{}", identity::default_agent(&base, "robovast"));

    println!("{}", identity::mint_person("0000-0002-1825-0097")?);
    match identity::validate_orcid("0000-0002-1825-0098") {
        Ok(()) => println!("accepted"),
        Err(e) => println!("rejected: {e}"),
    }

    println!("{}", identity::doi_identifier("10.5281/zenodo.18702398")?);
    for bad in ["../secrets", "a/b"] {
        if let Err(e) = RelPath::new(["inputs", bad]) {
            println!("{bad:?}: {e}");
        }
    }
    Ok(())
}
