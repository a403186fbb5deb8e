//! Flat key-value configuration with `[kernel]`, `[measure]`, `[method]`
//! and `[output]` sections. Unknown sections or keys are errors.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::haar::CutoffMode;
use crate::kernels::{BuiltinKernel, KernelSpec};
use crate::measures::MeasureSpec;

#[derive(Clone, Debug, PartialEq)]
pub enum MethodConfig {
    Step {
        /// Grid resolution; mutually exclusive with `epsilon`.
        n: Option<usize>,
        /// Error target driving `min_n_for_eps`.
        epsilon: Option<f64>,
    },
    Wavelet {
        epsilon: f64,
        /// Fraction of `epsilon` assigned to truncation + selection.
        epsilon_split: f64,
        extra_levels: u32,
        mode: String,
        conservative_delta: bool,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum OutputFormat {
    Csv,
    Bin,
    Gnuplot,
}

impl OutputFormat {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "csv" => Ok(OutputFormat::Csv),
            "bin" => Ok(OutputFormat::Bin),
            "gnuplot" => Ok(OutputFormat::Gnuplot),
            other => Err(Error::usage(format!("unknown output format `{other}`"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct OutputConfig {
    pub path: String,
    pub format: OutputFormat,
}

#[derive(Clone, Debug)]
pub struct Config {
    pub kernel_name: String,
    pub kernel_a: f64,
    pub kernel_b: f64,
    pub support_halfwidth: Option<f64>,
    pub measure: MeasureSpec,
    pub method: MethodConfig,
    pub dim: usize,
    /// Target window halfwidth `T`; targets live on `[−T,T]^d`.
    pub window: f64,
    /// Target points per axis.
    pub grid: usize,
    pub realizations: usize,
    pub seed: u64,
    /// Validation tolerance (validate-gaussian).
    pub tolerance: f64,
    pub output: Option<OutputConfig>,
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::usage(format!("config: key `{key}` has invalid value `{value}`")))
}

fn take(map: &mut HashMap<String, String>, key: &str) -> Option<String> {
    map.remove(key)
}

fn require(map: &mut HashMap<String, String>, section: &str, key: &str) -> Result<String> {
    take(map, key)
        .ok_or_else(|| Error::usage(format!("config: missing key `{key}` in [{section}]")))
}

fn reject_unknown(map: &HashMap<String, String>, section: &str) -> Result<()> {
    if let Some(key) = map.keys().next() {
        return Err(Error::usage(format!(
            "config: unknown key `{key}` in [{section}]"
        )));
    }
    Ok(())
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let mut sections: HashMap<String, HashMap<String, String>> = HashMap::new();
        let mut current: Option<String> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim().to_string();
                if !matches!(name.as_str(), "kernel" | "measure" | "method" | "output") {
                    return Err(Error::usage(format!(
                        "config line {}: unknown section [{name}]",
                        lineno + 1
                    )));
                }
                sections.entry(name.clone()).or_default();
                current = Some(name);
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::usage(format!("config line {}: expected `key = value`", lineno + 1))
            })?;
            let section = current.as_ref().ok_or_else(|| {
                Error::usage(format!(
                    "config line {}: key outside of any section",
                    lineno + 1
                ))
            })?;
            let prev = sections
                .get_mut(section)
                .unwrap()
                .insert(key.trim().to_string(), value.trim().to_string());
            if prev.is_some() {
                return Err(Error::usage(format!(
                    "config line {}: duplicate key `{}`",
                    lineno + 1,
                    key.trim()
                )));
            }
        }

        let mut kernel = sections.remove("kernel").ok_or_else(|| {
            Error::usage("config: missing [kernel] section")
        })?;
        let kernel_name = require(&mut kernel, "kernel", "name")?;
        let kernel_a: f64 = parse_num("a", &require(&mut kernel, "kernel", "a")?)?;
        let kernel_b: f64 = parse_num("b", &require(&mut kernel, "kernel", "b")?)?;
        let support_halfwidth = take(&mut kernel, "support_halfwidth")
            .map(|v| parse_num("support_halfwidth", &v))
            .transpose()?;
        reject_unknown(&kernel, "kernel")?;

        let mut measure = sections.remove("measure").ok_or_else(|| {
            Error::usage("config: missing [measure] section")
        })?;
        let measure_name = require(&mut measure, "measure", "name")?;
        let m = match measure_name.as_str() {
            "stable" => {
                let alpha = parse_num("alpha", &require(&mut measure, "measure", "alpha")?)?;
                let beta = parse_num("beta", &require(&mut measure, "measure", "beta")?)?;
                MeasureSpec::stable(alpha, beta)?
            }
            "gaussian" => MeasureSpec::Gaussian,
            "poisson" => {
                let intensity =
                    parse_num("intensity", &require(&mut measure, "measure", "intensity")?)?;
                MeasureSpec::poisson(intensity)?
            }
            "gamma_levy" => {
                let theta = parse_num("theta", &require(&mut measure, "measure", "theta")?)?;
                MeasureSpec::gamma_levy(theta)?
            }
            other => return Err(Error::usage(format!("config: unknown measure `{other}`"))),
        };
        reject_unknown(&measure, "measure")?;

        let mut method = sections.remove("method").ok_or_else(|| {
            Error::usage("config: missing [method] section")
        })?;
        let method_name = require(&mut method, "method", "name")?;
        let dim = take(&mut method, "dim").map(|v| parse_num("dim", &v)).transpose()?.unwrap_or(2);
        let window: f64 = parse_num("window", &require(&mut method, "method", "window")?)?;
        let grid =
            take(&mut method, "grid").map(|v| parse_num("grid", &v)).transpose()?.unwrap_or(50);
        let realizations = take(&mut method, "realizations")
            .map(|v| parse_num("realizations", &v))
            .transpose()?
            .unwrap_or(1);
        let seed =
            take(&mut method, "seed").map(|v| parse_num("seed", &v)).transpose()?.unwrap_or(0);
        let tolerance = take(&mut method, "tolerance")
            .map(|v| parse_num("tolerance", &v))
            .transpose()?
            .unwrap_or(0.02);
        let mc = match method_name.as_str() {
            "step" => {
                let n = take(&mut method, "n").map(|v| parse_num("n", &v)).transpose()?;
                let epsilon =
                    take(&mut method, "epsilon").map(|v| parse_num("epsilon", &v)).transpose()?;
                match (&n, &epsilon) {
                    (Some(_), Some(_)) => {
                        return Err(Error::usage(
                            "config: step method takes `n` or `epsilon`, not both",
                        ))
                    }
                    (None, None) => {
                        return Err(Error::usage(
                            "config: step method needs `n` or `epsilon`",
                        ))
                    }
                    _ => {}
                }
                MethodConfig::Step { n, epsilon }
            }
            "wavelet" => {
                let epsilon =
                    parse_num("epsilon", &require(&mut method, "method", "epsilon")?)?;
                let epsilon_split = take(&mut method, "epsilon_split")
                    .map(|v| parse_num("epsilon_split", &v))
                    .transpose()?
                    .unwrap_or(0.99);
                let extra_levels = take(&mut method, "extra_levels")
                    .map(|v| parse_num("extra_levels", &v))
                    .transpose()?
                    .unwrap_or(0);
                let mode = take(&mut method, "mode").unwrap_or_else(|| "holder".to_string());
                let conservative_delta = take(&mut method, "conservative_delta")
                    .map(|v| parse_num("conservative_delta", &v))
                    .transpose()?
                    .unwrap_or(false);
                MethodConfig::Wavelet {
                    epsilon,
                    epsilon_split,
                    extra_levels,
                    mode,
                    conservative_delta,
                }
            }
            other => return Err(Error::usage(format!("config: unknown method `{other}`"))),
        };
        reject_unknown(&method, "method")?;

        let output = match sections.remove("output") {
            None => None,
            Some(mut out) => {
                let path = require(&mut out, "output", "path")?;
                let format = take(&mut out, "format")
                    .map(|v| OutputFormat::from_name(&v))
                    .transpose()?
                    .unwrap_or(OutputFormat::Csv);
                reject_unknown(&out, "output")?;
                Some(OutputConfig { path, format })
            }
        };

        let cfg = Config {
            kernel_name,
            kernel_a,
            kernel_b,
            support_halfwidth,
            measure: m,
            method: mc,
            dim,
            window,
            grid,
            realizations,
            seed,
            tolerance,
            output,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Config> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Config::parse(&text)
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::usage("config: dim must be at least 1"));
        }
        if !(self.window > 0.0) {
            return Err(Error::usage("config: window must be positive"));
        }
        if self.grid == 0 {
            return Err(Error::usage("config: grid must be at least 1"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::usage("config: tolerance must be positive"));
        }
        Ok(())
    }

    pub fn builtin_kernel(&self) -> Result<BuiltinKernel> {
        BuiltinKernel::from_name(&self.kernel_name, self.kernel_a, self.kernel_b)
    }

    /// Support halfwidth `A`: explicit, or `T + a` for the compact kernels.
    pub fn resolved_support(&self) -> Result<f64> {
        if let Some(a) = self.support_halfwidth {
            if !(a > 0.0) {
                return Err(Error::usage("config: support_halfwidth must be positive"));
            }
            return Ok(a);
        }
        self.builtin_kernel()?.natural_support(self.window).ok_or_else(|| {
            Error::usage(
                "config: gaussian_bell kernel needs an explicit support_halfwidth",
            )
        })
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        self.builtin_kernel()?.spec(self.dim, self.resolved_support()?)
    }

    /// Cut-off mode for the wavelet method, resolved against the kernel
    /// metadata.
    pub fn cutoff_mode(&self) -> Result<CutoffMode> {
        let mode = match &self.method {
            MethodConfig::Wavelet { mode, .. } => mode.as_str(),
            MethodConfig::Step { .. } => {
                return Err(Error::usage("config: cutoff mode applies to the wavelet method"))
            }
        };
        let k = self.kernel_spec()?;
        match mode {
            "bounded" => {
                let sup = k.sup_bound.ok_or_else(|| {
                    Error::usage("config: kernel has no sup bound for bounded mode")
                })?;
                Ok(CutoffMode::Bounded { sup })
            }
            "holder" => {
                let (c_t, gamma) = k.holder.ok_or_else(|| {
                    Error::usage("config: kernel has no Hölder metadata")
                })?;
                Ok(CutoffMode::Holder { c_t, gamma })
            }
            "differentiable" => {
                let c_t = k.grad_bound.ok_or_else(|| {
                    Error::usage("config: kernel has no gradient bound")
                })?;
                Ok(CutoffMode::Differentiable { c_t })
            }
            other => Err(Error::usage(format!("config: unknown cutoff mode `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "
[kernel]
name = gaussian_bell
a = 0.05
b = 1.0
support_halfwidth = 1.4

[measure]
name = gaussian

[method]
name = step
n = 100
window = 0.5
grid = 50
realizations = 10
seed = 7

[output]
path = out.csv
format = csv
";

    #[test]
    fn parses_complete_config() {
        let c = Config::parse(GOOD).unwrap();
        assert_eq!(c.kernel_name, "gaussian_bell");
        assert_eq!(c.method, MethodConfig::Step { n: Some(100), epsilon: None });
        assert_eq!(c.measure, MeasureSpec::Gaussian);
        assert_eq!(c.grid, 50);
        assert_eq!(c.seed, 7);
        assert_eq!(c.output.as_ref().unwrap().format, OutputFormat::Csv);
        assert_eq!(c.resolved_support().unwrap(), 1.4);
    }

    #[test]
    fn unknown_key_rejected() {
        let bad = GOOD.replace("seed = 7", "sede = 7");
        let err = Config::parse(&bad).unwrap_err();
        assert!(err.to_string().contains("sede"), "{err}");
    }

    #[test]
    fn unknown_section_rejected() {
        let bad = format!("{GOOD}\n[plotting]\nstyle = heat\n");
        assert!(Config::parse(&bad).is_err());
    }

    #[test]
    fn step_n_and_epsilon_exclusive() {
        let bad = GOOD.replace("n = 100", "n = 100\nepsilon = 0.5");
        assert!(Config::parse(&bad).is_err());
        let neither = GOOD.replace("n = 100", "");
        assert!(Config::parse(&neither).is_err());
    }

    #[test]
    fn wavelet_defaults() {
        let text = "
[kernel]
name = pyramid
a = 1
b = 1

[measure]
name = stable
alpha = 1.5
beta = 0.0

[method]
name = wavelet
epsilon = 0.5
window = 1.0
";
        let c = Config::parse(text).unwrap();
        match &c.method {
            MethodConfig::Wavelet { epsilon, epsilon_split, extra_levels, mode, .. } => {
                assert_eq!(*epsilon, 0.5);
                assert_eq!(*epsilon_split, 0.99);
                assert_eq!(*extra_levels, 0);
                assert_eq!(mode, "holder");
            }
            other => panic!("unexpected method {other:?}"),
        }
        // pyramid support defaults to T + a
        assert_eq!(c.resolved_support().unwrap(), 2.0);
        assert!(matches!(c.cutoff_mode().unwrap(), CutoffMode::Holder { .. }));
    }

    #[test]
    fn gaussian_bell_needs_explicit_support() {
        let bad = GOOD.replace("support_halfwidth = 1.4\n", "");
        let c = Config::parse(&bad).unwrap();
        assert!(c.resolved_support().is_err());
    }

    #[test]
    fn duplicate_key_rejected() {
        let bad = GOOD.replace("seed = 7", "seed = 7\nseed = 8");
        assert!(Config::parse(&bad).is_err());
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let text = GOOD.replace("n = 100", "n = 100  # resolution");
        assert!(Config::parse(&text).is_ok());
    }
}
