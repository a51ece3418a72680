use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use mulab::averaging::{average, Interval};
use mulab::correlations::{correlation, katai_bilinear_max, pattern_densities, CorrelationQuery, PatternStats, Term};
use mulab::furstenberg::{
    bernoulli_divergence, empirical_measure, ergodicity_diagnostic, invariance_defect, BernoulliDivergence,
    EmpiricalMeasure,
};
use mulab::nilseq::{char_difference_identity, heisenberg_orbit, weyl_test, OrbitSpec};
use mulab::pretentious::{distance, m_scan, strong_aperiodicity_scan, GridSpec, Q_MAX_CAP};
use mulab::seqgen::{cache, materialize, Storage};
use mulab::uniformity::{
    gcs_cap, gcs_check, gowers_interval_values, gowers_zn, gowers_zn_with, local_seminorm, local_star_seminorm,
    nonperiodic_gcs_check, vdc_values, GowersMethod, GowersOptions,
};
use mulab::Complex64;

use crate::args::*;
use crate::input::{cache_file, config_err, kind, load_block, parse_func, parse_mult, scheme, CliResult};
use crate::report::{json_report, real, Csv, Output};

pub struct Ctx<'a> {
    pub config: &'a Value,
    pub seed: u64,
    pub cache_dir: Option<&'a Path>,
    pub format: Option<Format>,
}

impl Ctx<'_> {
    fn fmt(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }

    fn json<T: Serialize>(&self, result: &T) -> Output {
        Output { body: json_report(self.config, result), extension: "json", extra_outputs: vec![] }
    }

    fn csv(&self, csv: Csv) -> Output {
        Output { body: csv.finish(), extension: "csv", extra_outputs: vec![] }
    }
}

fn flag(b: bool) -> String {
    (b as u8).to_string()
}

pub fn run(cmd: &Command, ctx: &Ctx) -> CliResult<(Output, Option<String>)> {
    let out = match cmd {
        Command::Sieve(a) => sieve(a, ctx)?,
        Command::Correlate(a) => correlate(a, ctx)?,
        Command::Patterns(a) => patterns(a, ctx)?,
        Command::Gowers(a) => gowers(a, ctx)?,
        Command::LocalUniformity(a) => local(a, ctx)?,
        Command::StarUniformity(a) => star(a, ctx)?,
        Command::Pretentious(a) => pretentious(a, ctx)?,
        Command::Katai(a) => katai(a, ctx)?,
        Command::Furstenberg(a) => furstenberg(a, ctx)?,
        Command::Nilseq(a) => nilseq(a, ctx)?,
        Command::Check(a) => return check(a, ctx),
    };
    Ok((out, None))
}

#[derive(Serialize)]
struct SieveSummary {
    start: u64,
    end: u64,
    storage: &'static str,
    mean: Complex64,
    count_plus: Option<u64>,
    count_minus: Option<u64>,
    count_zero: Option<u64>,
    cache_file: Option<String>,
}

fn sieve(a: &SieveArgs, ctx: &Ctx) -> CliResult<Output> {
    let spec = parse_func("--func", &a.func, ctx.seed)?;
    if a.start == 0 || a.n < a.start {
        return Err(config_err("--N", "need 1 <= start <= N"));
    }
    let end = a.n + 1;
    let block = materialize(&spec, a.start, end)?;
    let mean = average(&block, Interval::new(a.start - 1, a.n)?, mulab::averaging::AvgKind::Cesaro)?;
    let counts = (block.storage() != Storage::ComplexPair).then(|| {
        let mut c = [0u64; 3];
        for n in a.start..end {
            c[(block.get_int(n).unwrap() + 1) as usize] += 1;
        }
        c
    });
    let mut extra = vec![];
    let mut cache_path = None;
    if let Some(dir) = ctx.cache_dir {
        if let Some(path) = cache_file(dir, &spec, a.start, end) {
            cache::write(&path, &block)?;
            cache_path = Some(path.display().to_string());
            extra.push(path);
        }
    }
    let summary = SieveSummary {
        start: a.start,
        end,
        storage: match block.storage() {
            Storage::Sign1Bit => "sign1bit",
            Storage::Trit2Bit => "trit2bit",
            Storage::ComplexPair => "complex_pair",
        },
        mean,
        count_plus: counts.map(|c| c[2]),
        count_minus: counts.map(|c| c[0]),
        count_zero: counts.map(|c| c[1]),
        cache_file: cache_path,
    };
    let mut out = ctx.json(&summary);
    out.extra_outputs = extra;
    Ok(out)
}

fn correlate(a: &CorrelateArgs, ctx: &Ctx) -> CliResult<Output> {
    let spec = parse_func("--func", &a.func, ctx.seed)?;
    let k = a.shifts.len();
    if k == 0 {
        return Err(config_err("--shifts", "need at least one shift"));
    }
    let dil = a.dilations.clone().unwrap_or_else(|| vec![1; k]);
    if dil.len() != k {
        return Err(config_err("--dilations", format!("expected {k} values, got {}", dil.len())));
    }
    if dil.contains(&0) {
        return Err(config_err("--dilations", "dilations must be positive"));
    }
    let conj: Vec<bool> = match &a.conj {
        None => vec![false; k],
        Some(c) => {
            let v: Vec<bool> = c
                .chars()
                .map(|ch| match ch {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    _ => Err(config_err("--conj", "use a string of 0/1")),
                })
                .collect::<CliResult<_>>()?;
            if v.len() != k {
                return Err(config_err("--conj", format!("expected {k} digits, got {}", v.len())));
            }
            v
        }
    };
    let sch = scheme(&a.range)?;
    let terms: Vec<Term> = (0..k).map(|i| Term::new(dil[i], a.shifts[i], conj[i])).collect();
    let reach = terms.iter().map(|t| t.dilation * sch.max_end() + t.shift).max().unwrap();
    let query = CorrelationQuery::new(terms, sch)?;
    let block = load_block(&spec, 1, reach + 1, ctx.cache_dir)?;
    let r = correlation(&[&block], &query)?;
    Ok(match ctx.fmt(Format::Csv) {
        Format::Json => ctx.json(&r),
        Format::Csv => {
            let mut csv = Csv::new(ctx.config, &["interval_start", "interval_end", "kind", "re", "im", "degenerate"]);
            for (iv, m) in r.report.intervals.iter().zip(&r.report.means) {
                csv.row(&[
                    iv.lo.to_string(),
                    iv.hi.to_string(),
                    r.report.kind.as_str().into(),
                    real(m.re),
                    real(m.im),
                    flag(r.degenerate),
                ]);
            }
            ctx.csv(csv)
        }
    })
}

fn patterns(a: &PatternsArgs, ctx: &Ctx) -> CliResult<Output> {
    let spec = parse_func("--func", &a.func, ctx.seed)?;
    if a.ell == 0 || a.ell > mulab::correlations::PATTERN_CAP {
        return Err(config_err("--ell", format!("must be in 1..={}", mulab::correlations::PATTERN_CAP)));
    }
    let sch = scheme(&a.range)?;
    let block = load_block(&spec, 1, sch.max_end() + a.ell as u64, ctx.cache_dir)?;
    let stats = pattern_densities(&block, a.ell, &sch)?;
    Ok(match ctx.fmt(Format::Csv) {
        Format::Json => ctx.json(&stats),
        Format::Csv => {
            let mut csv = Csv::new(ctx.config, &["interval_start", "interval_end", "kind", "pattern", "frequency"]);
            for st in &stats {
                for (i, f) in st.frequencies.iter().enumerate() {
                    csv.row(&[
                        st.interval.lo.to_string(),
                        st.interval.hi.to_string(),
                        st.kind.as_str().into(),
                        PatternStats::pattern_string(st.ell, i),
                        real(*f),
                    ]);
                }
            }
            ctx.csv(csv)
        }
    })
}

fn method(m: MethodArg, s: u32) -> GowersMethod {
    match m {
        MethodArg::Auto => GowersMethod::fastest(s),
        MethodArg::Direct => GowersMethod::Direct,
        MethodArg::FftU2 => GowersMethod::FftU2,
        MethodArg::Recursive => GowersMethod::Recursive,
    }
}

fn gowers(a: &GowersArgs, ctx: &Ctx) -> CliResult<Output> {
    let spec = parse_func("--func", &a.func, ctx.seed)?;
    if a.s == 0 {
        return Err(config_err("--s", "must be at least 1"));
    }
    if a.n < 2 {
        return Err(config_err("--N", "must be at least 2"));
    }
    if a.stride == 0 {
        return Err(config_err("--stride", "must be at least 1"));
    }
    let m = method(a.method, a.s);
    if m == GowersMethod::FftU2 && a.s != 2 {
        return Err(config_err("--method", "fft_u2 is only defined for s = 2"));
    }
    let block = load_block(&spec, 1, a.n + 1, ctx.cache_dir)?;
    let vals: Vec<Complex64> = (1..=a.n).map(|n| block.get(n)).collect();
    let opts = GowersOptions { stride: a.stride, ..GowersOptions::new(m) };
    let r = match a.domain {
        GowersDomain::Interval => gowers_interval_values(&vals, a.s, &opts)?,
        GowersDomain::Cyclic => gowers_zn_with(&vals, a.s, &opts)?,
    };
    Ok(match ctx.fmt(Format::Json) {
        Format::Json => ctx.json(&r),
        Format::Csv => {
            let mut csv = Csv::new(ctx.config, &["s", "method", "N", "value", "power", "clamped", "estimate"]);
            csv.row(&[
                r.s.to_string(),
                r.method.as_str().into(),
                r.n.to_string(),
                real(r.value),
                real(r.power),
                flag(r.clamped),
                flag(r.estimate),
            ]);
            ctx.csv(csv)
        }
    })
}

fn local(a: &LocalArgs, ctx: &Ctx) -> CliResult<Output> {
    let spec = parse_func("--func", &a.func, ctx.seed)?;
    if a.s == 0 || a.h == 0 {
        return Err(config_err("--H", "need s >= 1 and H >= 1"));
    }
    let sch = scheme(&a.range)?;
    let block = load_block(&spec, 1, sch.max_end() + a.s as u64 * a.h + 1, ctx.cache_dir)?;
    let r = local_seminorm(&block, &sch, a.s, a.h)?;
    Ok(match ctx.fmt(Format::Json) {
        Format::Json => ctx.json(&r),
        Format::Csv => {
            let mut csv =
                Csv::new(ctx.config, &["H", "interval_start", "interval_end", "kind", "raw", "value", "clamped"]);
            for g in &r.grid {
                csv.row(&[
                    g.h.to_string(),
                    g.interval.lo.to_string(),
                    g.interval.hi.to_string(),
                    r.kind.as_str().into(),
                    real(g.raw),
                    real(g.value),
                    flag(g.clamped),
                ]);
            }
            ctx.csv(csv)
        }
    })
}

fn star(a: &StarArgs, ctx: &Ctx) -> CliResult<Output> {
    let spec = parse_func("--func", &a.func, ctx.seed)?;
    if a.s == 0 || a.h == 0 {
        return Err(config_err("--H", "need s >= 1 and H >= 1"));
    }
    let sch = scheme(&a.range)?;
    let block = load_block(&spec, 1, sch.max_end() + a.h + 1, ctx.cache_dir)?;
    let r = local_star_seminorm(&block, &sch, a.s, a.h, kind(a.range.avg))?;
    Ok(match ctx.fmt(Format::Json) {
        Format::Json => ctx.json(&r),
        Format::Csv => {
            let mut csv = Csv::new(ctx.config, &["interval_start", "interval_end", "kind", "s", "H", "value"]);
            for (iv, m) in r.intervals.iter().zip(&r.means) {
                csv.row(&[
                    iv.lo.to_string(),
                    iv.hi.to_string(),
                    r.kind.as_str().into(),
                    r.s.to_string(),
                    r.h.to_string(),
                    real(*m),
                ]);
            }
            ctx.csv(csv)
        }
    })
}

fn pretentious(a: &PretentiousArgs, ctx: &Ctx) -> CliResult<Output> {
    let f = parse_mult("--func", &a.func)?;
    if !(a.step > 0.0 && a.step.is_finite()) {
        return Err(config_err("--step", "must be a positive real"));
    }
    let grid = GridSpec { t_max: a.t_max, step: a.step, full_range: a.full_range, ..GridSpec::default() };
    let need_n = || match a.n {
        Some(n) if n >= 2 => Ok(n),
        _ => Err(config_err("--N", "required, at least 2")),
    };
    Ok(match a.mode {
        PretentiousMode::Distance => {
            let g = parse_mult("--g", &a.g)?;
            ctx.json(&distance(&f, &g, need_n()?)?)
        }
        PretentiousMode::MScan => ctx.json(&m_scan(&f, need_n()?, &grid)?),
        PretentiousMode::Aperiodicity => {
            let list = a.n_list.clone().ok_or_else(|| config_err("--N-list", "required for aperiodicity"))?;
            if list.is_empty() || list.iter().any(|&n| n < 2) {
                return Err(config_err("--N-list", "cutoffs must be at least 2"));
            }
            if a.q_max == 0 || a.q_max > Q_MAX_CAP {
                return Err(config_err("--q-max", format!("must be in 1..={Q_MAX_CAP}")));
            }
            let t = strong_aperiodicity_scan(&f, &list, a.q_max, &grid)?;
            match ctx.fmt(Format::Csv) {
                Format::Json => ctx.json(&t),
                Format::Csv => {
                    let mut csv =
                        Csv::new(ctx.config, &["q", "character_index", "N", "min_value", "argmin_t", "growth_flag"]);
                    for r in &t.rows {
                        csv.row(&[
                            r.q.to_string(),
                            r.character_index.to_string(),
                            r.n.to_string(),
                            real(r.min_value),
                            real(r.argmin_t),
                            flag(r.growth_flag),
                        ]);
                    }
                    ctx.csv(csv)
                }
            }
        }
    })
}

fn katai(a: &KataiArgs, ctx: &Ctx) -> CliResult<Output> {
    let spec = parse_func("--func", &a.func, ctx.seed)?;
    if a.n < a.k {
        return Err(config_err("--N", "must be at least K"));
    }
    let block = load_block(&spec, 1, a.n + 1, ctx.cache_dir)?;
    let r = katai_bilinear_max(&block, a.n, a.k)?;
    Ok(match ctx.fmt(Format::Csv) {
        Format::Json => ctx.json(&r),
        Format::Csv => {
            let mut csv = Csv::new(ctx.config, &["p", "q", "M", "abs_value"]);
            for e in &r.table {
                csv.row(&[e.p.to_string(), e.q.to_string(), e.m.to_string(), real(e.abs_value)]);
            }
            ctx.csv(csv)
        }
    })
}

#[derive(Serialize)]
struct MeasureEntry {
    measure: EmpiricalMeasure,
    divergence: BernoulliDivergence,
    /// Against the length `ell + 1` measure; absent at the length cap.
    invariance_defect: Option<f64>,
}

fn furstenberg(a: &FurstenbergArgs, ctx: &Ctx) -> CliResult<Output> {
    let spec = parse_func("--func", &a.func, ctx.seed)?;
    let sch = scheme(&a.range)?;
    let out = match a.mode {
        FurstenbergMode::Measure => {
            let cap = mulab::correlations::PATTERN_CAP;
            if a.ell == 0 || a.ell > cap {
                return Err(config_err("--ell", format!("must be in 1..={cap}")));
            }
            let block = load_block(&spec, 1, sch.max_end() + a.ell as u64 + 1, ctx.cache_dir)?;
            let entries = sch
                .intervals()
                .iter()
                .map(|&iv| {
                    let m = empirical_measure(&block, iv, a.ell, sch.kind())?;
                    let defect = if a.ell < cap {
                        Some(invariance_defect(&m, &empirical_measure(&block, iv, a.ell + 1, sch.kind())?)?)
                    } else {
                        None
                    };
                    Ok(MeasureEntry { divergence: bernoulli_divergence(&m), measure: m, invariance_defect: defect })
                })
                .collect::<mulab::Result<Vec<_>>>()?;
            ctx.json(&entries)
        }
        FurstenbergMode::Ergodicity => {
            if a.term_budget == 0 || a.n_cap == 0 {
                return Err(config_err("--term-budget", "term budget and n-cap must be at least 1"));
            }
            let block = load_block(&spec, 1, sch.max_end() + a.n_cap + a.shift_cap + 1, ctx.cache_dir)?;
            ctx.json(&ergodicity_diagnostic(&block, &sch, a.term_budget, a.shift_cap, a.n_cap, ctx.seed)?)
        }
    };
    Ok(out)
}

fn parse_freqs(s: &str) -> CliResult<Vec<Vec<i64>>> {
    s.split(';')
        .map(|v| {
            v.split(',')
                .map(|x| x.trim().parse::<i64>().map_err(|_| config_err("--freqs", format!("`{x}` is not an integer"))))
                .collect()
        })
        .collect()
}

fn nilseq(a: &NilseqArgs, ctx: &Ctx) -> CliResult<Output> {
    if a.length == 0 {
        return Err(config_err("--length", "must be at least 1"));
    }
    let spec = OrbitSpec { alpha: a.alpha, beta: a.beta, length: a.length };
    Ok(match a.mode {
        NilseqMode::Orbit => {
            let orbit = heisenberg_orbit(&spec)?;
            match ctx.fmt(Format::Csv) {
                Format::Json => ctx.json(&orbit),
                Format::Csv => {
                    let mut csv = Csv::new(ctx.config, &["n", "x", "y", "z"]);
                    for (i, p) in orbit.iter().enumerate() {
                        csv.row(&[(i + 1).to_string(), real(p.x), real(p.y), real(p.z)]);
                    }
                    ctx.csv(csv)
                }
            }
        }
        NilseqMode::Identity => {
            if a.h == 0 {
                return Err(config_err("--h", "must be at least 1"));
            }
            ctx.json(&char_difference_identity(a.alpha, a.h, 1, a.length + 1)?)
        }
        NilseqMode::Weyl => {
            let freqs = parse_freqs(&a.freqs)?;
            if freqs.iter().any(|k| k.len() != 3) {
                return Err(config_err("--freqs", "each frequency needs 3 components (x, y, z)"));
            }
            if freqs.iter().any(|k| k.iter().all(|&c| c == 0)) {
                return Err(config_err("--freqs", "zero frequency vector"));
            }
            let orbit = heisenberg_orbit(&spec)?;
            let pts: Vec<[f64; 3]> = orbit.iter().map(|p| [p.x, p.y, p.z]).collect();
            ctx.json(&weyl_test(&pts, &freqs)?)
        }
    })
}

#[derive(Serialize, Default)]
struct SuiteReport {
    suite: &'static str,
    instances: u64,
    holds: u64,
    all_hold: bool,
    /// Largest lhs / rhs over the instances.
    worst_ratio: f64,
    /// Instances where only the alternative constant covers the left side.
    #[serde(skip_serializing_if = "Option::is_none")]
    needed_alternative: Option<u64>,
    violations: Vec<u64>,
}

fn random_disk(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| {
            let r: f64 = rng.random();
            Complex64::from_polar(r, std::f64::consts::TAU * rng.random::<f64>())
        })
        .collect()
}

fn run_suite(
    name: &'static str,
    seed: u64,
    count: u64,
    mut one: impl FnMut(&mut ChaCha8Rng) -> mulab::Result<(f64, f64, bool, bool)>,
) -> mulab::Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = SuiteReport { suite: name, instances: count, ..Default::default() };
    let mut alt = 0;
    for i in 0..count {
        let (lhs, rhs, holds, needed_alt) = one(&mut rng)?;
        if rhs > 0.0 {
            rep.worst_ratio = rep.worst_ratio.max(lhs / rhs);
        }
        if holds {
            rep.holds += 1;
        } else {
            rep.violations.push(i);
        }
        alt += needed_alt as u64;
    }
    rep.all_hold = rep.violations.is_empty();
    if name == "nonperiodic-gcs" {
        rep.needed_alternative = Some(alt);
    }
    Ok(rep)
}

fn check(a: &CheckArgs, ctx: &Ctx) -> CliResult<(Output, Option<String>)> {
    if a.seeds == 0 {
        return Err(config_err("--seeds", "must be at least 1"));
    }
    let wants_gcs = matches!(a.suite, Suite::Gcs | Suite::NonperiodicGcs | Suite::All);
    if wants_gcs {
        if !(2..=8).contains(&a.s) {
            return Err(config_err("--s", "GCS suites need 2 <= s <= 8"));
        }
        if a.m < 2 || a.m > gcs_cap(a.s) {
            return Err(config_err("--M", format!("must be in 2..={} for s = {}", gcs_cap(a.s), a.s)));
        }
    }
    let (s, m) = (a.s, a.m);
    let nseq = (1usize << s) - 1;
    let base = ctx.seed;
    let mut suites = Vec::new();
    let want = |x: Suite| a.suite == x || a.suite == Suite::All;
    if want(Suite::Gcs) {
        suites.push(run_suite("gcs", base, a.seeds, |rng| {
            let seqs: Vec<_> = (0..nseq).map(|_| random_disk(rng, m)).collect();
            let r = gcs_check(&seqs, s, m)?;
            Ok((r.lhs, r.rhs, r.holds, false))
        })?);
    }
    if want(Suite::NonperiodicGcs) {
        suites.push(run_suite("nonperiodic-gcs", base.wrapping_add(1), a.seeds, |rng| {
            let seqs: Vec<_> = (0..nseq).map(|_| random_disk(rng, (s as usize + 1) * m)).collect();
            let r = nonperiodic_gcs_check(&seqs, s, m)?;
            Ok((r.lhs, r.bound_stated.max(r.bound_alternative), r.holds, r.needed_alternative))
        })?);
    }
    if want(Suite::Vdc) {
        // ten times as many instances: each one is cheap
        suites.push(run_suite("vdc", base.wrapping_add(2), a.seeds * 10, |rng| {
            let mm = rng.random_range(2..=64usize);
            let r = rng.random_range(1..=mm);
            let v = random_disk(rng, mm + r);
            let rep = vdc_values(&v, mm, r)?;
            Ok((rep.lhs, rep.rhs, rep.holds, false))
        })?);
    }
    if want(Suite::Monotonicity) {
        suites.push(run_suite("monotonicity", base.wrapping_add(3), a.seeds, |rng| {
            let n = rng.random_range(2..=64usize);
            let v: Vec<Complex64> =
                (0..n).map(|_| Complex64::new(if rng.random_bool(0.5) { 1.0 } else { -1.0 }, 0.0)).collect();
            let mut worst = (0.0, 1.0, true);
            for s in 1..=2 {
                let lo = gowers_zn(&v, s, GowersMethod::Direct)?.value;
                let hi = gowers_zn(&v, s + 1, GowersMethod::fastest(s + 1))?.value;
                if lo > hi + 1e-12 {
                    worst = (lo, hi, false);
                }
            }
            Ok((worst.0, worst.1, worst.2, false))
        })?);
    }
    let failed: Vec<&str> = suites.iter().filter(|r| !r.all_hold).map(|r| r.suite).collect();
    let violated = (!failed.is_empty()).then(|| format!("violated in suites: {}", failed.join(", ")));
    Ok((ctx.json(&suites), violated))
}
