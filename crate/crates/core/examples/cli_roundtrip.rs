//! Drive the command-line interface in-process: generate, solve to a
//! candidate file, then certify that candidate.

fn main() {
    let dir = std::env::temp_dir().join("bmsync-cli-example");
    std::fs::create_dir_all(&dir).unwrap();
    let mat = dir.join("z2.mat");
    let cand = dir.join("z2.cand");
    let (mat, cand) = (mat.to_str().unwrap(), cand.to_str().unwrap());
    let runs: [&[&str]; 3] = [
        &[
            "generate", "--model", "z2", "--n", "60", "--sigma", "0.5", "--seed", "3", "--out", mat,
        ],
        &["solve", mat, "--p", "4", "--seed", "1", "--out", cand],
        &["certify", mat, "--candidate", cand],
    ];
    for args in runs {
        println!("$ bmsync {}", args.join(" "));
        let code = bmsync::cli::run(std::iter::once("bmsync").chain(args.iter().copied()));
        println!("(exit {code})\n");
    }
}
