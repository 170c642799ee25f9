//! The chapters of the guide in `book/src`, compiled so that every Rust
//! snippet in them runs as a doc-test.

macro_rules! chapter {
    ($name:ident, $file:literal) => {
        #[doc = include_str!(concat!("../../../book/src/", $file))]
        pub mod $name {}
    };
}

chapter!(overview, "overview.md");
chapter!(profile, "profile.md");
chapter!(radial, "radial.md");
chapter!(kummer, "kummer.md");
chapter!(interaction, "interaction.md");
chapter!(constants, "constants.md");
chapter!(lattice, "lattice.md");
chapter!(cli, "cli.md");
chapter!(checks, "checks.md");
