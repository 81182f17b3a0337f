use std::path::PathBuf;

fn main() {
    let dir = PathBuf::from(std::env::var("CARGO_MANIFEST_DIR").unwrap());
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    let config = cbindgen::Config::from_file(dir.join("cbindgen.toml")).expect("cbindgen.toml");
    match cbindgen::generate_with_config(&dir, config) {
        Ok(b) => {
            b.write_to_file(dir.join("include").join("calibench.h"));
        }
        // Keep the checked-in header if generation fails (e.g. mid-edit syntax errors);
        // rustc reports the real problem.
        Err(e) => println!("cargo:warning=header not regenerated: {e}"),
    }
}
