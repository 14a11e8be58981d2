//! Run configuration files.
//!
//! ```text
//! # comments start with '#'
//! task = flow              # flow | winding | rectangle | diagnostic | eigentraj
//! family = generator_loop
//! seed = 7
//! output = runs/gen
//!
//! [family]
//! dim = 4
//!
//! [grid]                   # multiplication and schrodinger_pair only
//! half_width = 10
//! points = 160
//!
//! [solver]
//! probe_points = 9
//! guard = 1e-6             # absolute; default is relative to the path scale
//! max_depth = 40
//! quadrature_points = 513
//! oracle_samples = 400     # optional cross-check
//! trajectory_samples = 101
//! chi_scale = 1
//!
//! [diagnostic]
//! n = 1
//! t0 = 0
//! probes = 0.4, 0.2, 0.1, 0.05
//! test_vectors = 8
//! ```
//!
//! Family parameters, all under `[family]`:
//!
//! | family            | keys                          |
//! |-------------------|-------------------------------|
//! | multiplication    | (none; needs `[grid]`)        |
//! | schrodinger_pair  | (none; needs `[grid]`)        |
//! | matrix_file       | `path`                        |
//! | projection_pair   | `dim`, `rank_p`, `rank_q`     |
//! | generator_loop    | `dim`                         |
//! | linear_segment    | `start`, `end` (diagonals)    |
//!
//! Task and family compatibility:
//!
//! | task       | families                                                                  |
//! |------------|---------------------------------------------------------------------------|
//! | flow       | multiplication, matrix_file, projection_pair, generator_loop, linear_segment |
//! | winding    | matrix_file, generator_loop, linear_segment                               |
//! | rectangle  | matrix_file, projection_pair, generator_loop, linear_segment              |
//! | diagnostic | multiplication, schrodinger_pair                                          |
//! | eigentraj  | multiplication, matrix_file, projection_pair, generator_loop, linear_segment |

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fixtures::Grid;
use crate::flow::FlowOptions;
use crate::winding::DEFAULT_QUADRATURE_POINTS;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Flow,
    Winding,
    Rectangle,
    Diagnostic,
    Eigentraj,
}

impl Task {
    pub const ALL: [Task; 5] = [
        Task::Flow,
        Task::Winding,
        Task::Rectangle,
        Task::Diagnostic,
        Task::Eigentraj,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::Flow => "flow",
            Task::Winding => "winding",
            Task::Rectangle => "rectangle",
            Task::Diagnostic => "diagnostic",
            Task::Eigentraj => "eigentraj",
        }
    }

    fn accepts(self, family: FamilyKind) -> bool {
        use FamilyKind::*;
        match self {
            Task::Flow | Task::Eigentraj => family != SchrodingerPair,
            Task::Winding => matches!(family, MatrixFile | GeneratorLoop | LinearSegment),
            Task::Rectangle => matches!(family, MatrixFile | ProjectionPair | GeneratorLoop | LinearSegment),
            Task::Diagnostic => matches!(family, Multiplication | SchrodingerPair),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown task `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Multiplication,
    SchrodingerPair,
    MatrixFile,
    ProjectionPair,
    GeneratorLoop,
    LinearSegment,
}

impl FamilyKind {
    const ALL: [FamilyKind; 6] = [
        FamilyKind::Multiplication,
        FamilyKind::SchrodingerPair,
        FamilyKind::MatrixFile,
        FamilyKind::ProjectionPair,
        FamilyKind::GeneratorLoop,
        FamilyKind::LinearSegment,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Multiplication => "multiplication",
            FamilyKind::SchrodingerPair => "schrodinger_pair",
            FamilyKind::MatrixFile => "matrix_file",
            FamilyKind::ProjectionPair => "projection_pair",
            FamilyKind::GeneratorLoop => "generator_loop",
            FamilyKind::LinearSegment => "linear_segment",
        }
    }

    fn keys(self) -> &'static [&'static str] {
        match self {
            FamilyKind::Multiplication | FamilyKind::SchrodingerPair => &[],
            FamilyKind::MatrixFile => &["path"],
            FamilyKind::ProjectionPair => &["dim", "rank_p", "rank_q"],
            FamilyKind::GeneratorLoop => &["dim"],
            FamilyKind::LinearSegment => &["start", "end"],
        }
    }

    fn needs_grid(self) -> bool {
        matches!(self, FamilyKind::Multiplication | FamilyKind::SchrodingerPair)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `diag(2 + tanh(t x_j))`.
    Multiplication,
    /// Gaussian weight with the standard plateau function.
    SchrodingerPair,
    MatrixFile {
        path: String,
    },
    /// Random projections drawn from the run seed.
    ProjectionPair {
        dim: usize,
        rank_p: usize,
        rank_q: usize,
    },
    GeneratorLoop {
        dim: usize,
    },
    /// `t -> (1-t) diag(start) + t diag(end)`.
    LinearSegment {
        start: Vec<f64>,
        end: Vec<f64>,
    },
}

impl Family {
    pub fn kind(&self) -> FamilyKind {
        match self {
            Family::Multiplication => FamilyKind::Multiplication,
            Family::SchrodingerPair => FamilyKind::SchrodingerPair,
            Family::MatrixFile { .. } => FamilyKind::MatrixFile,
            Family::ProjectionPair { .. } => FamilyKind::ProjectionPair,
            Family::GeneratorLoop { .. } => FamilyKind::GeneratorLoop,
            Family::LinearSegment { .. } => FamilyKind::LinearSegment,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub flow: FlowOptions,
    pub quadrature_points: usize,
    pub oracle_samples: Option<usize>,
    pub trajectory_samples: usize,
    pub chi_scale: u32,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            flow: FlowOptions::default(),
            quadrature_points: DEFAULT_QUADRATURE_POINTS,
            oracle_samples: None,
            trajectory_samples: 101,
            chi_scale: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticOptions {
    pub n: u32,
    pub t0: f64,
    pub probes: Vec<f64>,
    pub test_vectors: usize,
}

impl Default for DiagnosticOptions {
    fn default() -> Self {
        Self {
            n: 1,
            t0: 0.0,
            probes: vec![0.4, 0.2, 0.1, 0.05],
            test_vectors: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub family: Family,
    pub grid: Option<Grid>,
    pub solver: SolverOptions,
    pub diagnostic: DiagnosticOptions,
    pub output: String,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Section {
    Top,
    Family,
    Grid,
    Solver,
    Diagnostic,
}

impl Section {
    fn name(self) -> &'static str {
        match self {
            Section::Top => "top level",
            Section::Family => "[family]",
            Section::Grid => "[grid]",
            Section::Solver => "[solver]",
            Section::Diagnostic => "[diagnostic]",
        }
    }

    fn keys(self) -> &'static [&'static str] {
        match self {
            Section::Top => &["task", "family", "seed", "output"],
            Section::Family => &["path", "dim", "rank_p", "rank_q", "start", "end"],
            Section::Grid => &["half_width", "points"],
            Section::Solver => &[
                "probe_points",
                "guard",
                "max_depth",
                "quadrature_points",
                "oracle_samples",
                "trajectory_samples",
                "chi_scale",
            ],
            Section::Diagnostic => &["n", "t0", "probes", "test_vectors"],
        }
    }
}

#[derive(Debug, Clone)]
struct Entry {
    line: usize,
    value: String,
}

type Table = BTreeMap<(Section, String), Entry>;

fn config_err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Table> {
    let mut table = Table::new();
    let mut section = Section::Top;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| config_err(line, format!("malformed section header `{content}`")))?
                .trim();
            section = match name {
                "family" => Section::Family,
                "grid" => Section::Grid,
                "solver" => Section::Solver,
                "diagnostic" => Section::Diagnostic,
                _ => return Err(config_err(line, format!("unknown section `[{name}]`"))),
            };
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| config_err(line, format!("expected `key = value`, found `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(config_err(line, "missing key before `=`"));
        }
        if key == "mu" || key == "μ" {
            return Err(config_err(
                line,
                "unknown key `mu`: the level mu is chosen by the engine, not the user (set `guard` or `probe_points` instead)",
            ));
        }
        if !section.keys().contains(&key) {
            return Err(config_err(line, format!("unknown key `{key}` in {}", section.name())));
        }
        if value.is_empty() {
            return Err(config_err(line, format!("missing value for `{key}`")));
        }
        if let Some(prev) = table.insert(
            (section, key.to_string()),
            Entry {
                line,
                value: value.to_string(),
            },
        ) {
            return Err(config_err(
                line,
                format!("duplicate key `{key}` (first set on line {})", prev.line),
            ));
        }
    }
    Ok(table)
}

struct Reader {
    table: Table,
}

impl Reader {
    fn entry(&self, section: Section, key: &str) -> Option<&Entry> {
        self.table.get(&(section, key.to_string()))
    }

    fn take<T: FromStr>(&self, section: Section, key: &str) -> Result<Option<T>> {
        match self.entry(section, key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse()
                .map(Some)
                .map_err(|_| config_err(e.line, format!("invalid value `{}` for `{key}`", e.value))),
        }
    }

    fn require<T: FromStr>(&self, section: Section, key: &str, family: &str) -> Result<T> {
        self.take(section, key)?.ok_or_else(|| {
            config_err(
                self.last_line(),
                format!("missing required key `{key}` in {} for family {family}", section.name()),
            )
        })
    }

    fn list(&self, section: Section, key: &str) -> Result<Option<Vec<f64>>> {
        match self.entry(section, key) {
            None => Ok(None),
            Some(e) => e
                .value
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(Some)
                .map_err(|_| config_err(e.line, format!("invalid number list `{}` for `{key}`", e.value))),
        }
    }

    fn last_line(&self) -> usize {
        self.table.values().map(|e| e.line).max().unwrap_or(1)
    }

    fn line_of(&self, section: Section, key: &str) -> usize {
        self.entry(section, key).map_or_else(|| self.last_line(), |e| e.line)
    }
}

/// Parses a configuration; every error carries the line it refers to.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_for(text, None)
}

/// Like [`parse_config`], with the task supplied by the caller (a CLI
/// subcommand). A conflicting `task` line is an error.
pub fn parse_config_for(text: &str, task: Option<Task>) -> Result<RunConfig> {
    let r = Reader { table: tokenize(text)? };

    let written: Option<Task> = match r.entry(Section::Top, "task") {
        None => None,
        Some(e) => Some(e.value.parse().map_err(|m: String| config_err(e.line, m))?),
    };
    let task = match (written, task) {
        (Some(a), Some(b)) if a != b => {
            return Err(config_err(
                r.line_of(Section::Top, "task"),
                format!("config sets task `{a}` but `{b}` was requested"),
            ))
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => return Err(config_err(r.last_line(), "missing required key `task`")),
    };

    let family_entry = r
        .entry(Section::Top, "family")
        .ok_or_else(|| config_err(r.last_line(), "missing required key `family`"))?;
    let kind = FamilyKind::ALL
        .into_iter()
        .find(|k| k.name() == family_entry.value)
        .ok_or_else(|| config_err(family_entry.line, format!("unknown family `{}`", family_entry.value)))?;
    if !task.accepts(kind) {
        return Err(config_err(
            family_entry.line,
            format!("task `{task}` does not support family `{}`", kind.name()),
        ));
    }
    for ((section, key), e) in &r.table {
        if *section == Section::Family && !kind.keys().contains(&key.as_str()) {
            return Err(config_err(
                e.line,
                format!("key `{key}` does not apply to family {}", kind.name()),
            ));
        }
        if *section == Section::Grid && !kind.needs_grid() {
            return Err(config_err(
                e.line,
                format!("[grid] does not apply to family {}", kind.name()),
            ));
        }
        if *section == Section::Diagnostic && task != Task::Diagnostic {
            return Err(config_err(
                e.line,
                format!("[diagnostic] does not apply to task {task}"),
            ));
        }
    }

    let name = kind.name();
    let family = match kind {
        FamilyKind::Multiplication => Family::Multiplication,
        FamilyKind::SchrodingerPair => Family::SchrodingerPair,
        FamilyKind::MatrixFile => Family::MatrixFile {
            path: r.require(Section::Family, "path", name)?,
        },
        FamilyKind::ProjectionPair => {
            let dim: usize = r.require(Section::Family, "dim", name)?;
            let rank_p: usize = r.require(Section::Family, "rank_p", name)?;
            let rank_q: usize = r.require(Section::Family, "rank_q", name)?;
            if dim == 0 || rank_p > dim || rank_q > dim {
                return Err(config_err(
                    r.line_of(Section::Family, "dim"),
                    format!("need 0 < dim and ranks at most dim, got dim {dim}, ranks {rank_p}, {rank_q}"),
                ));
            }
            Family::ProjectionPair { dim, rank_p, rank_q }
        }
        FamilyKind::GeneratorLoop => {
            let dim: usize = r.require(Section::Family, "dim", name)?;
            if dim < 2 {
                return Err(config_err(
                    r.line_of(Section::Family, "dim"),
                    "generator_loop needs dim >= 2",
                ));
            }
            Family::GeneratorLoop { dim }
        }
        FamilyKind::LinearSegment => {
            let missing = |key: &str| {
                config_err(
                    r.last_line(),
                    format!("missing required key `{key}` in [family] for family {name}"),
                )
            };
            let start = r.list(Section::Family, "start")?.ok_or_else(|| missing("start"))?;
            let end = r.list(Section::Family, "end")?.ok_or_else(|| missing("end"))?;
            if start.len() != end.len() {
                return Err(config_err(
                    r.line_of(Section::Family, "end"),
                    format!("`start` has {} entries but `end` has {}", start.len(), end.len()),
                ));
            }
            Family::LinearSegment { start, end }
        }
    };

    let grid = if kind.needs_grid() {
        let half_width: f64 = r.require(Section::Grid, "half_width", name)?;
        let points: usize = r.require(Section::Grid, "points", name)?;
        Some(Grid::new(half_width, points).map_err(|e| config_err(r.line_of(Section::Grid, "points"), e.to_string()))?)
    } else {
        None
    };

    let mut solver = SolverOptions::default();
    if let Some(v) = r.take(Section::Solver, "probe_points")? {
        if v < 3 {
            return Err(config_err(
                r.line_of(Section::Solver, "probe_points"),
                "probe_points must be at least 3",
            ));
        }
        solver.flow.probe_points = v;
    }
    if let Some(v) = r.take::<f64>(Section::Solver, "guard")? {
        if !(v.is_finite() && v >= 0.0) {
            return Err(config_err(
                r.line_of(Section::Solver, "guard"),
                "guard must be non-negative",
            ));
        }
        solver.flow.guard = Some(v);
    }
    if let Some(v) = r.take(Section::Solver, "max_depth")? {
        solver.flow.max_depth = v;
    }
    if let Some(v) = r.take(Section::Solver, "quadrature_points")? {
        solver.quadrature_points = v;
    }
    solver.oracle_samples = r.take(Section::Solver, "oracle_samples")?;
    if let Some(v) = r.take(Section::Solver, "trajectory_samples")? {
        if v < 2 {
            return Err(config_err(
                r.line_of(Section::Solver, "trajectory_samples"),
                "trajectory_samples must be at least 2",
            ));
        }
        solver.trajectory_samples = v;
    }
    if let Some(v) = r.take(Section::Solver, "chi_scale")? {
        if v == 0 {
            return Err(config_err(
                r.line_of(Section::Solver, "chi_scale"),
                "chi_scale must be positive",
            ));
        }
        solver.chi_scale = v;
    }

    let mut diagnostic = DiagnosticOptions::default();
    if let Some(v) = r.take(Section::Diagnostic, "n")? {
        if v == 0 {
            return Err(config_err(r.line_of(Section::Diagnostic, "n"), "n must be positive"));
        }
        diagnostic.n = v;
    }
    if let Some(v) = r.take(Section::Diagnostic, "t0")? {
        diagnostic.t0 = v;
    }
    if let Some(v) = r.list(Section::Diagnostic, "probes")? {
        diagnostic.probes = v;
    }
    if let Some(v) = r.take(Section::Diagnostic, "test_vectors")? {
        diagnostic.test_vectors = v;
    }
    let line = r.line_of(Section::Diagnostic, "probes");
    if let Some(&t) = diagnostic
        .probes
        .iter()
        .chain([&diagnostic.t0])
        .find(|&&t| !(0.0..=1.0).contains(&t))
    {
        return Err(config_err(line, format!("diagnostic parameter {t} outside [0, 1]")));
    }

    Ok(RunConfig {
        task,
        family,
        grid,
        solver,
        diagnostic,
        output: r.take(Section::Top, "output")?.unwrap_or_else(|| "spfl".to_string()),
        seed: r.take(Section::Top, "seed")?.unwrap_or(0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_flow_config() {
        let c = parse_config("task = flow\nfamily = generator_loop\n[family]\ndim = 4\n").unwrap();
        assert_eq!(c.task, Task::Flow);
        assert_eq!(c.family, Family::GeneratorLoop { dim: 4 });
        assert_eq!(c.solver, SolverOptions::default());
        assert_eq!(c.seed, 0);
        assert_eq!(c.output, "spfl");
        assert!(c.grid.is_none());
    }

    #[test]
    fn mu_is_rejected_with_line() {
        let err = parse_config("task = flow\nfamily = generator_loop\n[solver]\nmu = 3\n").unwrap_err();
        match err {
            Error::Config { line, message } => {
                assert_eq!(line, 4);
                assert!(message.contains("chosen by the engine"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn errors_carry_lines() {
        let line = |text: &str| match parse_config(text) {
            Err(Error::Config { line, .. }) => line,
            other => panic!("expected config error, got {other:?}"),
        };
        assert_eq!(
            line("task = flow\nfamily = generator_loop\n[family]\ndim = 4\nbogus = 1\n"),
            5
        );
        assert_eq!(line("task = flow\nfamily = nope\n"), 2);
        assert_eq!(line("task = flow\nfamily\n"), 2);
        assert_eq!(line("task = flow\n[wrong]\n"), 2);
        assert_eq!(line("task = diagnostic\nfamily = generator_loop\n"), 2);
        assert_eq!(line("task = flow\ntask = flow\n"), 2);
        assert_eq!(
            line("task = flow\nfamily = generator_loop\n[family]\nrank_p = 2\ndim = 3\n"),
            4
        );
        assert_eq!(line("task = flow\nfamily = generator_loop\n[family]\ndim = x\n"), 4);
        assert_eq!(
            line("task = flow\nfamily = generator_loop\n[family]\ndim = 4\n[solver]\nprobe_points = 2\n"),
            6
        );
    }

    #[test]
    fn missing_parameters() {
        assert!(matches!(
            parse_config("family = generator_loop\n"),
            Err(Error::Config { .. })
        ));
        assert!(parse_config("task = flow\nfamily = projection_pair\n[family]\ndim = 4\n").is_err());
        assert!(parse_config("task = diagnostic\nfamily = multiplication\n").is_err());
        assert!(parse_config("task = flow\nfamily = linear_segment\n[family]\nstart = 1, 2\nend = 1\n").is_err());
    }

    #[test]
    fn task_from_caller() {
        let text = "family = generator_loop\n[family]\ndim = 3\n";
        assert_eq!(parse_config_for(text, Some(Task::Winding)).unwrap().task, Task::Winding);
        let fixed = "task = flow\nfamily = generator_loop\n[family]\ndim = 3\n";
        assert!(parse_config_for(fixed, Some(Task::Winding)).is_err());
        assert!(parse_config_for(fixed, Some(Task::Flow)).is_ok());
    }

    #[test]
    fn full_config() {
        let text = "\
# multiplication diagnostic
task = diagnostic
family = multiplication
seed = 11
output = out/mult

[grid]
half_width = 10
points = 160

[diagnostic]
n = 1
probes = 0.4, 0.2   # trailing comment
test_vectors = 3
";
        let c = parse_config(text).unwrap();
        assert_eq!(c.grid, Some(Grid::new(10.0, 160).unwrap()));
        assert_eq!(c.diagnostic.probes, vec![0.4, 0.2]);
        assert_eq!(c.diagnostic.test_vectors, 3);
        assert_eq!(c.seed, 11);
        assert_eq!(c.output, "out/mult");
    }
}
