use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::input::{parse_count, parse_real_arg};

/// Correlation and uniformity statistics for bounded multiplicative functions.
///
/// Sequences are given with `--func`: liouville, mobius, one,
/// dirichlet:Q:I, constant[:RE[:IM]], alternating, poly:C0,C1,..,
/// block_sign_a, block_sign_b, random[:SEED], or a JSON spec object.
/// Counts accept scientific notation (1e6).
#[derive(Debug, Parser)]
#[command(name = "mulab", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Directory of sieve cache files.
    #[arg(long, global = true, env = "MULAB_CACHE_DIR")]
    pub cache_dir: Option<PathBuf>,
    /// Report path; the manifest goes next to it as `<out>.manifest.json`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Report format; each subcommand has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Avg {
    Cesaro,
    Log,
}

/// Averaging range: `[N]`, or an explicit interval scheme.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Range {
    /// Average over n in [1, N].
    #[arg(long = "N", value_parser = parse_count)]
    #[serde(rename = "N")]
    pub n: Option<u64>,
    /// Interval scheme as JSON: [[a,b],...] or {"rule":"prefix","base":..,"ratio":..,"count":..}.
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long, value_enum, default_value = "cesaro")]
    pub avg: Avg,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Materialize a sequence on [start, N] and store it in the cache.
    Sieve(SieveArgs),
    /// Chowla/Elliott correlation E_m Π a(c_i m + n_i).
    Correlate(CorrelateArgs),
    /// Sign-pattern frequencies of length ell.
    Patterns(PatternsArgs),
    /// Gowers norm U^s[N] or U^s(Z_N).
    Gowers(GowersArgs),
    /// Finite-scale local seminorm U^s(I) over a ladder of box sizes.
    LocalUniformity(LocalArgs),
    /// Star seminorm E_n ‖S_n a‖_{U^s[H]}.
    StarUniformity(StarArgs),
    /// Pretentious distance, M(f;N) scans and aperiodicity tables.
    Pretentious(PretentiousArgs),
    /// Kátai bilinear maximum over prime pairs below K.
    Katai(KataiArgs),
    /// Empirical cylinder measures and ergodicity diagnostics.
    Furstenberg(FurstenbergArgs),
    /// Heisenberg orbits, the difference identity and Weyl sums.
    Nilseq(NilseqArgs),
    /// Randomized inequality suites.
    Check(CheckArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Sieve(_) => "sieve",
            Command::Correlate(_) => "correlate",
            Command::Patterns(_) => "patterns",
            Command::Gowers(_) => "gowers",
            Command::LocalUniformity(_) => "local-uniformity",
            Command::StarUniformity(_) => "star-uniformity",
            Command::Pretentious(_) => "pretentious",
            Command::Katai(_) => "katai",
            Command::Furstenberg(_) => "furstenberg",
            Command::Nilseq(_) => "nilseq",
            Command::Check(_) => "check",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SieveArgs {
    #[arg(long, default_value = "liouville")]
    pub func: String,
    #[arg(long, value_parser = parse_count, default_value = "1")]
    pub start: u64,
    /// Last index, inclusive.
    #[arg(long = "N", value_parser = parse_count)]
    #[serde(rename = "N")]
    pub n: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct CorrelateArgs {
    #[arg(long, default_value = "liouville")]
    pub func: String,
    /// Shifts n_i, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_count, required = true)]
    pub shifts: Vec<u64>,
    /// Dilations c_i; defaults to all 1.
    #[arg(long, value_delimiter = ',', value_parser = parse_count)]
    pub dilations: Option<Vec<u64>>,
    /// Conjugation pattern, one 0/1 per term.
    #[arg(long)]
    pub conj: Option<String>,
    #[command(flatten)]
    pub range: Range,
}

#[derive(Debug, Args, Serialize)]
pub struct PatternsArgs {
    #[arg(long, default_value = "liouville")]
    pub func: String,
    #[arg(long, default_value_t = 3)]
    pub ell: usize,
    #[command(flatten)]
    pub range: Range,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodArg {
    Auto,
    Direct,
    FftU2,
    Recursive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GowersDomain {
    /// U^s[N]: zero-padded to Z_{2N} and normalized by the indicator.
    Interval,
    /// U^s(Z_N) on the values at 1..=N.
    Cyclic,
}

#[derive(Debug, Args, Serialize)]
pub struct GowersArgs {
    #[arg(long, default_value = "liouville")]
    pub func: String,
    #[arg(long, default_value_t = 2)]
    pub s: u32,
    #[arg(long = "N", value_parser = parse_count)]
    #[serde(rename = "N")]
    pub n: u64,
    #[arg(long, value_enum, default_value = "auto")]
    pub method: MethodArg,
    #[arg(long, value_enum, default_value = "interval")]
    pub domain: GowersDomain,
    /// Shift subsampling for the recursive method (1 = exact).
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct LocalArgs {
    #[arg(long, default_value = "liouville")]
    pub func: String,
    #[arg(long, default_value_t = 1)]
    pub s: u32,
    /// Largest box size; the ladder is {H/100, H/10, H}.
    #[arg(long = "H", value_parser = parse_count)]
    #[serde(rename = "H")]
    pub h: u64,
    #[command(flatten)]
    pub range: Range,
}

#[derive(Debug, Args, Serialize)]
pub struct StarArgs {
    #[arg(long, default_value = "liouville")]
    pub func: String,
    #[arg(long, default_value_t = 1)]
    pub s: u32,
    /// Window length.
    #[arg(long = "H", value_parser = parse_count)]
    #[serde(rename = "H")]
    pub h: u64,
    #[command(flatten)]
    pub range: Range,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PretentiousMode {
    Distance,
    MScan,
    Aperiodicity,
}

#[derive(Debug, Args, Serialize)]
pub struct PretentiousArgs {
    #[arg(long, value_enum, default_value = "distance")]
    pub mode: PretentiousMode,
    #[arg(long, default_value = "liouville")]
    pub func: String,
    /// Second function for `distance`.
    #[arg(long, default_value = "one")]
    pub g: String,
    #[arg(long = "N", value_parser = parse_count)]
    #[serde(rename = "N")]
    pub n: Option<u64>,
    /// Cutoffs for `aperiodicity`, comma separated.
    #[arg(long = "N-list", value_delimiter = ',', value_parser = parse_count)]
    #[serde(rename = "N_list")]
    pub n_list: Option<Vec<u64>>,
    #[arg(long, default_value_t = 10)]
    pub q_max: u64,
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
    /// Half-width of the t window; defaults to max(10, ln N).
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Scan the whole range |t| ≤ N.
    #[arg(long)]
    pub full_range: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct KataiArgs {
    #[arg(long, default_value = "liouville")]
    pub func: String,
    #[arg(long = "K", value_parser = parse_count)]
    #[serde(rename = "K")]
    pub k: u64,
    #[arg(long = "N", value_parser = parse_count)]
    #[serde(rename = "N")]
    pub n: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FurstenbergMode {
    Measure,
    Ergodicity,
}

#[derive(Debug, Args, Serialize)]
pub struct FurstenbergArgs {
    #[arg(long, value_enum, default_value = "measure")]
    pub mode: FurstenbergMode,
    #[arg(long, default_value = "liouville")]
    pub func: String,
    #[arg(long, default_value_t = 3)]
    pub ell: usize,
    #[arg(long, default_value_t = 3)]
    pub term_budget: usize,
    #[arg(long, default_value_t = 5)]
    pub shift_cap: u64,
    #[arg(long, value_parser = parse_count, default_value = "100")]
    pub n_cap: u64,
    #[command(flatten)]
    pub range: Range,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NilseqMode {
    Orbit,
    Identity,
    Weyl,
}

#[derive(Debug, Args, Serialize)]
pub struct NilseqArgs {
    #[arg(long, value_enum, default_value = "orbit")]
    pub mode: NilseqMode,
    /// Decimal or sqrt2m1 / sqrt3m1 / golden.
    #[arg(long, value_parser = parse_real_arg, default_value = "sqrt2m1")]
    pub alpha: f64,
    #[arg(long, value_parser = parse_real_arg, default_value = "sqrt3m1")]
    pub beta: f64,
    #[arg(long, value_parser = parse_count, default_value = "1e4")]
    pub length: u64,
    /// Shift h for `identity`.
    #[arg(long, default_value_t = 1)]
    pub h: u64,
    /// Frequency vectors for `weyl` over (x, y, z), e.g. "1,0,0;0,0,1".
    #[arg(long, default_value = "1,0,0;0,1,0;0,0,1")]
    pub freqs: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Gcs,
    NonperiodicGcs,
    Vdc,
    Monotonicity,
    All,
}

#[derive(Debug, Args, Serialize)]
pub struct CheckArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub suite: Suite,
    /// Random instances per suite.
    #[arg(long, value_parser = parse_count, default_value = "100")]
    pub seeds: u64,
    #[arg(long, default_value_t = 2)]
    pub s: u32,
    #[arg(long = "M", default_value_t = 16)]
    #[serde(rename = "M")]
    pub m: usize,
}
