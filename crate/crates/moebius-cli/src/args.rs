use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Exact counts, volumes and Euler characteristics of metric Moebius graphs.
///
/// Genus is always given doubled (`TWO_G`), so half-integer genera stay integral.
#[derive(Debug, Parser)]
#[command(name = "moebius", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct GlobalOpts {
    /// Directory of the count cache.
    #[arg(long, global = true, env = "MOEBIUS_CACHE_DIR", value_name = "DIR")]
    pub cache_dir: Option<PathBuf>,
    /// Keep every count in memory only.
    #[arg(long, global = true)]
    pub no_cache: bool,
    /// Output format (the default is csv for `euler`, json otherwise).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Seed for every sampled quantity.
    #[arg(long, global = true, default_value_t = 2024)]
    pub seed: u64,
    /// Largest admitted 2g-2+n [default: 4 for graphs and counts, 2 for
    /// quasipolynomial reconstruction].
    #[arg(long, global = true, value_name = "LEVEL")]
    pub max_level: Option<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    /// Asymmetric recursion.
    Rec,
    /// Symmetric recursion.
    Sym,
    /// Sum over integral metrics of every graph.
    Direct,
}

#[derive(Clone, Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// List the face-labelled graphs of a type with their automorphism orders.
    Enumerate {
        /// Doubled genus 2g.
        two_g: u32,
        /// Number of boundary faces.
        n: u32,
    },
    /// Measure of non-orientability of a graph at a metric.
    Mon {
        /// Graph in the JSON wire format.
        graph: PathBuf,
        /// Edge lengths as exact rationals, in edge order.
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        metric: Vec<String>,
    },
    /// Refined lattice point count N(L).
    Count {
        /// Doubled genus 2g.
        two_g: u32,
        /// Number of boundary faces.
        n: u32,
        /// Integer perimeters, one per boundary.
        #[arg(value_name = "L", required = true)]
        l: Vec<u32>,
        #[arg(long, value_enum, default_value_t = MethodArg::Rec)]
        method: MethodArg,
    },
    /// Reconstructed quasipolynomial, one polynomial per chamber and parity class.
    Table {
        /// Doubled genus 2g.
        two_g: u32,
        /// Number of boundary faces.
        n: u32,
    },
    /// Refined volume: the piecewise polynomial, or its value at L.
    Volume {
        /// Doubled genus 2g.
        two_g: u32,
        /// Number of boundary faces.
        n: u32,
        /// Perimeters as exact rationals.
        #[arg(value_name = "L")]
        l: Vec<String>,
    },
    /// Refined Euler characteristic table from the closed formula.
    Euler {
        /// Largest doubled genus and number of boundaries in the table.
        #[arg(long, num_args = 2, value_names = ["TWO_G", "N"], default_values_t = [5, 4])]
        max_chi: Vec<u32>,
    },
    /// Compare series expansions of the Weber correlators with the base counts.
    WeberCheck {
        /// Largest perimeter sum compared.
        #[arg(long, default_value_t = 16)]
        max_sum: u32,
    },
    /// Run the full acceptance suite.
    Verify,
    /// Inspect or maintain the count cache.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Clone, Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CacheAction {
    /// Summarize stored records per method and type.
    List,
    /// Check digests and recompute a sample of the stored values.
    Verify {
        /// Fraction of records recomputed.
        #[arg(long, default_value_t = 0.05)]
        fraction: f64,
    },
    /// Delete every stored record.
    Purge,
}
