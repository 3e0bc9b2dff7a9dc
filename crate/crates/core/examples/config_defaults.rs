//! Print the default configuration as JSON, a starting point for a config
//! file passed with `--config` or named by `BIMANUAL_CONFIG`. Any subset of
//! the keys may be given; missing ones keep these defaults.
//!
//! ```bash
//! cargo run -p bimanual-core --example config_defaults > my-config.json
//! ```

use bimanual_core::Config;

fn main() {
    let cfg = Config::default();
    println!("{}", serde_json::to_string_pretty(&cfg).expect("config serializes"));
}
