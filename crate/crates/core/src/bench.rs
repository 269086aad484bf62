//! Wall-clock scaling harness: timed receding-horizon runs, CSV records,
//! least-squares slope fits and plot data.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{OverflowPolicy, SearchConfig};
use crate::error::{BenchError, SearchError};
use crate::kernels::UctParams;
use crate::mdp::{EnvSpec, Mdp};
use crate::plan::{plan_once, ImplTag};
use crate::rng::derive_seed;

pub const CSV_HEADER: [&str; 6] = ["impl", "n", "depth", "trial", "step", "seconds"];

/// Slopes (seconds per layer) measured on the original hardware, printed
/// next to local measurements for reference only.
pub const REFERENCE_SLOPES: [(u32, f64, f64); 2] = [(5_000, 0.017, 0.008), (50_000, 0.225, 0.095)];

/// One timed search call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    #[serde(rename = "impl", with = "impl_tag_serde")]
    pub impl_tag: ImplTag,
    pub n: u32,
    pub depth: usize,
    pub trial: usize,
    pub step: usize,
    pub seconds: f64,
}

mod impl_tag_serde {
    use super::ImplTag;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(tag: &ImplTag, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(tag.as_str())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ImplTag, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub impls: Vec<ImplTag>,
    pub ns: Vec<u32>,
    pub depths: Vec<usize>,
    pub trials: usize,
    pub steps: usize,
    pub seed: u64,
    pub exploration: UctParams,
    pub overflow: OverflowPolicy,
    /// Per-layer state branching cap; `None` uses the environment's bound.
    pub branch_cap: Option<u32>,
}

impl Default for BenchConfig {
    /// Ten trials of ten steps over N in {5000, 50000} and depths 4 to 12.
    fn default() -> Self {
        Self {
            impls: ImplTag::ALL.to_vec(),
            ns: vec![5_000, 50_000],
            depths: (4..=12).collect(),
            trials: 10,
            steps: 10,
            seed: 0,
            exploration: UctParams::default(),
            overflow: OverflowPolicy::Fail,
            branch_cap: None,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        let empty = |what: &str| Err(BenchError::Config(format!("no {what} given")));
        if self.impls.is_empty() {
            return empty("implementations");
        }
        if self.ns.is_empty() {
            return empty("simulation counts");
        }
        if self.depths.is_empty() {
            return empty("depths");
        }
        if self.trials == 0 || self.steps == 0 {
            return Err(BenchError::Config(
                "trials and steps must be positive".into(),
            ));
        }
        if self.ns.contains(&0) || self.depths.contains(&0) {
            return Err(BenchError::Config(
                "simulation counts and depths must be positive".into(),
            ));
        }
        Ok(())
    }

    fn search_config(&self, env: &EnvSpec, n: u32, depth: usize, seed: u64) -> SearchConfig {
        SearchConfig::new(
            n,
            depth,
            self.branch_cap.unwrap_or_else(|| env.max_branching()),
            seed,
        )
        .with_exploration(self.exploration)
        .with_overflow(self.overflow)
    }
}

/// A trial that stopped on a search error.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchFailure {
    pub impl_tag: ImplTag,
    pub n: u32,
    pub depth: usize,
    pub trial: usize,
    pub step: usize,
    pub error: SearchError,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchOutcome {
    pub records: Vec<BenchRecord>,
    pub failures: Vec<BenchFailure>,
    pub overflow_events: u64,
}

/// Runs the grid sequentially. Each (N, depth) cell first gets one untimed
/// warm-up search per implementation. Each trial then plans for `steps`
/// steps; at every step each implementation searches the same state with the
/// same seed, back to back in a rotating order, and only the search call is
/// timed. The searches
/// are equivalent, so the executed action (taken from the first
/// implementation that succeeded) is the same whichever one is timed first.
/// A failed search ends that implementation's trial and is reported in
/// `failures` instead of producing a record.
pub fn run_benchmark(env: &EnvSpec, config: &BenchConfig) -> Result<BenchOutcome, BenchError> {
    config.validate()?;
    let mut out = BenchOutcome::default();
    for &n in &config.ns {
        for &depth in &config.depths {
            for &tag in &config.impls {
                let warm = config.search_config(env, n, depth, derive_seed(config.seed, u64::MAX));
                if let Err(error) = plan_once(tag, env.start(), env, &warm) {
                    log::warn!("warm-up failed for {tag} n={n} depth={depth}: {error}");
                }
            }
            for trial in 0..config.trials {
                run_trial(env, config, n, depth, trial, &mut out);
            }
        }
    }
    Ok(out)
}

fn run_trial(
    env: &EnvSpec,
    config: &BenchConfig,
    n: u32,
    depth: usize,
    trial: usize,
    out: &mut BenchOutcome,
) {
    let trial_seed = derive_seed(config.seed, trial as u64);
    let mut world = ChaCha8Rng::seed_from_u64(derive_seed(trial_seed, u64::MAX));
    let mut state = env.start();
    let mut alive = config.impls.clone();
    for step in 0..config.steps {
        let cfg = config.search_config(env, n, depth, derive_seed(trial_seed, step as u64));
        let mut action = None;
        // Rotate the running order every step so no implementation always
        // runs right after a particular other one.
        let mut order = alive.clone();
        order.rotate_left((trial * config.steps + step) % alive.len());
        for tag in order {
            let start = Instant::now();
            let decision = plan_once(tag, state, env, &cfg);
            let seconds = start.elapsed().as_secs_f64();
            match decision {
                Ok(d) => {
                    out.overflow_events += d.overflow_events;
                    out.records.push(BenchRecord {
                        impl_tag: tag,
                        n,
                        depth,
                        trial,
                        step,
                        seconds,
                    });
                    action.get_or_insert(d.action);
                }
                Err(error) => {
                    out.failures.push(BenchFailure {
                        impl_tag: tag,
                        n,
                        depth,
                        trial,
                        step,
                        error,
                    });
                    alive.retain(|&t| t != tag);
                }
            }
        }
        match action {
            Some(a) => state = env.transition(&state, a, world.random::<f64>()),
            None => return,
        }
    }
}

pub fn write_records_csv(records: &[BenchRecord], path: &Path) -> Result<(), BenchError> {
    let csv_err = |source| BenchError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_err)?;
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in records {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_records_csv(path: &Path) -> Result<Vec<BenchRecord>, BenchError> {
    let csv_err = |source| BenchError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?;
    if header.iter().ne(CSV_HEADER) {
        return Err(BenchError::Config(format!(
            "{}: unexpected header {:?}",
            path.display(),
            header
        )));
    }
    r.deserialize().collect::<Result<_, _>>().map_err(csv_err)
}

/// Ordinary least squares fit of `ys` against `xs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Returns `None` for fewer than two points or when all `xs` coincide.
/// A perfectly flat `ys` has r² = 1.
pub fn ols(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Some(LineFit {
        slope,
        intercept,
        r_squared,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFit {
    pub impl_tag: ImplTag,
    pub n: u32,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub depths: usize,
}

/// Mean and standard deviation of the seconds at each depth of one group.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthStats {
    pub depth: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub samples: usize,
}

/// Per-(impl, N) depth statistics, sorted by depth.
pub fn depth_stats(records: &[BenchRecord]) -> BTreeMap<(ImplTag, u32), Vec<DepthStats>> {
    let mut raw: BTreeMap<(ImplTag, u32), BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    for r in records {
        raw.entry((r.impl_tag, r.n))
            .or_default()
            .entry(r.depth)
            .or_default()
            .push(r.seconds);
    }
    raw.into_iter()
        .map(|(key, by_depth)| {
            let stats = by_depth
                .into_iter()
                .map(|(depth, xs)| {
                    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
                    let var = if xs.len() > 1 {
                        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
                    } else {
                        0.0
                    };
                    DepthStats {
                        depth,
                        mean,
                        std_dev: var.sqrt(),
                        samples: xs.len(),
                    }
                })
                .collect();
            (key, stats)
        })
        .collect()
}

/// Fits mean seconds against depth for every (impl, N) group with at least
/// three distinct depths. Smaller groups are skipped with a warning.
pub fn fit_slopes(records: &[BenchRecord]) -> Vec<SlopeFit> {
    let mut fits = Vec::new();
    for ((impl_tag, n), stats) in depth_stats(records) {
        if stats.len() < 3 {
            log::warn!(
                "skipping {impl_tag} n={n}: {} depth points, need at least 3",
                stats.len()
            );
            continue;
        }
        let xs: Vec<f64> = stats.iter().map(|s| s.depth as f64).collect();
        let ys: Vec<f64> = stats.iter().map(|s| s.mean).collect();
        if let Some(f) = ols(&xs, &ys) {
            fits.push(SlopeFit {
                impl_tag,
                n,
                slope: f.slope,
                intercept: f.intercept,
                r_squared: f.r_squared,
                depths: stats.len(),
            });
        }
    }
    fits
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeRatio {
    pub n: u32,
    pub numerator: ImplTag,
    pub denominator: ImplTag,
    pub ratio: f64,
}

/// `numerator` slope over `denominator` slope for every N fitted for both.
pub fn slope_ratios(
    fits: &[SlopeFit],
    numerator: ImplTag,
    denominator: ImplTag,
) -> Vec<SlopeRatio> {
    let find = |tag, n| fits.iter().find(|f| f.impl_tag == tag && f.n == n);
    let mut out: Vec<SlopeRatio> = fits
        .iter()
        .filter(|f| f.impl_tag == numerator)
        .filter_map(|num| {
            let den = find(denominator, num.n)?;
            Some(SlopeRatio {
                n: num.n,
                numerator,
                denominator,
                ratio: num.slope / den.slope,
            })
        })
        .collect();
    out.sort_by_key(|r| r.n);
    out
}

pub fn write_fits_csv(fits: &[SlopeFit], path: &Path) -> Result<(), BenchError> {
    let csv_err = |source| BenchError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["impl", "n", "slope", "intercept", "r_squared", "depths"])
        .map_err(csv_err)?;
    for f in fits {
        w.write_record([
            f.impl_tag.to_string(),
            f.n.to_string(),
            f.slope.to_string(),
            f.intercept.to_string(),
            f.r_squared.to_string(),
            f.depths.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Gnuplot data: one indexed block per (impl, N) with columns
/// `depth mean std_dev samples`, blocks separated by two blank lines.
pub fn plot_data(records: &[BenchRecord]) -> String {
    let mut out = String::from("# depth mean_seconds std_dev samples\n");
    for (i, ((tag, n), stats)) in depth_stats(records).into_iter().enumerate() {
        if i > 0 {
            out.push_str("\n\n");
        }
        let _ = writeln!(out, "# impl={tag} n={n}");
        for s in stats {
            let _ = writeln!(
                out,
                "{} {:e} {:e} {}",
                s.depth, s.mean, s.std_dev, s.samples
            );
        }
    }
    out
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

/// Self-contained SVG line chart of mean seconds against depth, one
/// polyline per (impl, N).
pub fn plot_svg(records: &[BenchRecord]) -> String {
    let groups = depth_stats(records);
    let (w, h, pad) = (640.0, 420.0, 60.0);
    let points = groups.values().flatten();
    let (mut x0, mut x1, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for s in points {
        x0 = x0.min(s.depth as f64);
        x1 = x1.max(s.depth as f64);
        y1 = y1.max(s.mean);
    }
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= 0.0 {
        y1 = 1.0;
    }
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - y / y1 * (h - 2.0 * pad);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<path d="M{pad} {} V{} H{}" stroke="black" fill="none"/>"#,
        pad,
        h - pad,
        w - pad
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">depth</text>"#,
        w / 2.0,
        h - 20.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle">mean seconds per search</text>"#,
        h / 2.0,
        h / 2.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="end">{:.3e}</text>"#,
        pad - 4.0,
        pad + 4.0,
        y1
    );
    let _ = writeln!(
        svg,
        r#"<text x="{pad}" y="{}" text-anchor="middle">{x0}</text>"#,
        h - pad + 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{x1}</text>"#,
        w - pad,
        h - pad + 15.0
    );
    for (i, ((tag, n), stats)) in groups.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = stats
            .iter()
            .map(|s| format!("{:.2},{:.2}", sx(s.depth as f64), sy(s.mean)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline data-group="{tag} n={n}" points="{}" stroke="{color}" stroke-width="2" fill="none"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" fill="{color}">{tag} N={n}</text>"#,
            w - pad - 110.0,
            pad + 16.0 * i as f64
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Writes `plot.dat` and `plot.svg` into `dir`, computed from the records in
/// `csv_path` only.
pub fn write_plots_from_csv(csv_path: &Path, dir: &Path) -> Result<(), BenchError> {
    let records = read_records_csv(csv_path)?;
    write_file(&dir.join("plot.dat"), &plot_data(&records))?;
    write_file(&dir.join("plot.svg"), &plot_svg(&records))
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<(), BenchError> {
    fs::write(path, text).map_err(|source: io::Error| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })
}
