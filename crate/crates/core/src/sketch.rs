//! Sketching assignments: consecutive codebook row ids per user and item,
//! parameter accounting, embedding lookup and the line-oriented file format.
//!
//! File layout (UTF-8, LF):
//!
//! ```text
//! #BACOSKETCH v1 K_u=<int> K_v=<int> gamma=<decimal> scu=<0|1> scheme=<name>
//! U\t<token>\t<primary_id>[\t<secondary_id>]     one per user, id order
//! I\t<token>\t<cluster_id>                       one per item, id order
//! ```

use std::collections::HashMap;
use std::io::{BufRead, Write};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;
use crate::solver::ClusterState;

const MAGIC: &str = "#BACOSKETCH";
const VERSION: &str = "v1";

#[derive(Debug, Clone, PartialEq)]
pub struct SketchMeta {
    pub gamma: f64,
    pub scheme: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SketchAssignment {
    pub user_primary: Vec<usize>,
    pub user_secondary: Option<Vec<usize>>,
    pub item_cluster: Vec<usize>,
    pub k_user: usize,
    pub k_item: usize,
    pub gamma: f64,
    pub scheme: String,
}

/// First-appearance relabeling into `0..K`.
#[derive(Debug, Default)]
struct Relabel {
    map: HashMap<usize, usize>,
}

impl Relabel {
    fn id(&mut self, raw: usize) -> usize {
        let next = self.map.len();
        *self.map.entry(raw).or_insert(next)
    }

    fn get(&self, raw: usize) -> Option<usize> {
        self.map.get(&raw).copied()
    }

    fn len(&self) -> usize {
        self.map.len()
    }
}

/// Maps raw solver labels to consecutive ids. Users and items are relabeled
/// independently; secondary labels share the user map and may extend it.
pub fn finalize(
    state: &ClusterState,
    secondary: Option<&[usize]>,
    meta: SketchMeta,
) -> SketchAssignment {
    finalize_labels(state.user_labels(), state.item_labels(), secondary, meta)
}

pub fn finalize_labels(
    user_labels: &[usize],
    item_labels: &[usize],
    secondary: Option<&[usize]>,
    meta: SketchMeta,
) -> SketchAssignment {
    finalize_inner(user_labels, item_labels, secondary, meta, None).0
}

/// Like [`finalize`], but secondary labels that would add user rows beyond
/// `budget` total rows collapse to the user's primary id. Returns the number
/// of collapsed users.
pub fn finalize_within_budget(
    state: &ClusterState,
    secondary: &[usize],
    meta: SketchMeta,
    budget: usize,
) -> (SketchAssignment, usize) {
    finalize_inner(
        state.user_labels(),
        state.item_labels(),
        Some(secondary),
        meta,
        Some(budget),
    )
}

fn finalize_inner(
    user_labels: &[usize],
    item_labels: &[usize],
    secondary: Option<&[usize]>,
    meta: SketchMeta,
    budget: Option<usize>,
) -> (SketchAssignment, usize) {
    let mut users = Relabel::default();
    let user_primary: Vec<usize> = user_labels.iter().map(|&l| users.id(l)).collect();
    let mut items = Relabel::default();
    let item_cluster: Vec<usize> = item_labels.iter().map(|&l| items.id(l)).collect();

    let mut collapsed = 0;
    let user_secondary = secondary.map(|sec| {
        assert_eq!(sec.len(), user_labels.len(), "one secondary label per user");
        let mut spare = budget.map(|b| b.saturating_sub(users.len() + items.len()));
        sec.iter()
            .zip(&user_primary)
            .map(|(&raw, &primary)| match users.get(raw) {
                Some(id) => id,
                None => match spare.as_mut() {
                    Some(0) => {
                        collapsed += 1;
                        primary
                    }
                    Some(left) => {
                        *left -= 1;
                        users.id(raw)
                    }
                    None => users.id(raw),
                },
            })
            .collect()
    });

    let assignment = SketchAssignment {
        user_primary,
        user_secondary,
        item_cluster,
        k_user: users.len(),
        k_item: items.len(),
        gamma: meta.gamma,
        scheme: meta.scheme,
    };
    (assignment, collapsed)
}

impl SketchAssignment {
    pub fn n_users(&self) -> usize {
        self.user_primary.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_cluster.len()
    }

    pub fn scu(&self) -> bool {
        self.user_secondary.is_some()
    }

    /// Checks id ranges, lengths and that every id in `0..K` is used.
    pub fn validate(&self) -> Result<()> {
        let mut seen_u = vec![false; self.k_user];
        let mut seen_v = vec![false; self.k_item];
        let user_ids = self
            .user_primary
            .iter()
            .chain(self.user_secondary.iter().flatten());
        for &id in user_ids {
            *seen_u.get_mut(id).ok_or_else(|| {
                Error::Validation(format!("user id {id} out of range 0..{}", self.k_user))
            })? = true;
        }
        for &id in &self.item_cluster {
            *seen_v.get_mut(id).ok_or_else(|| {
                Error::Validation(format!("item id {id} out of range 0..{}", self.k_item))
            })? = true;
        }
        if let Some(sec) = &self.user_secondary {
            if sec.len() != self.user_primary.len() {
                return Err(Error::Validation(format!(
                    "{} secondary ids for {} users",
                    sec.len(),
                    self.user_primary.len()
                )));
            }
        }
        if let Some(gap) = seen_u.iter().position(|s| !s) {
            return Err(Error::Validation(format!("user id {gap} is never used")));
        }
        if let Some(gap) = seen_v.iter().position(|s| !s) {
            return Err(Error::Validation(format!("item id {gap} is never used")));
        }
        Ok(())
    }

    /// Joint co-cluster labeling recovered from separate user and item ids.
    ///
    /// The file stores user and item ids in independent spaces, so pairing is
    /// reconstructed by greedy one-to-one matching of (user id, item id)
    /// pairs in descending order of shared edges. Unmatched item ids get
    /// fresh labels `K_u + id`. Users come first, then items.
    pub fn aligned_labeling(&self, graph: &BipartiteGraph) -> Vec<usize> {
        let mut links: HashMap<(usize, usize), usize> = HashMap::new();
        for (u, i) in graph.edges() {
            *links
                .entry((self.user_primary[u], self.item_cluster[i]))
                .or_default() += 1;
        }
        let mut pairs: Vec<((usize, usize), usize)> = links.into_iter().collect();
        pairs.sort_unstable_by(|(pa, ca), (pb, cb)| cb.cmp(ca).then(pa.cmp(pb)));
        let mut user_taken = vec![false; self.k_user];
        let mut item_partner = vec![None; self.k_item];
        for ((a, b), _) in pairs {
            if !user_taken[a] && item_partner[b].is_none() {
                user_taken[a] = true;
                item_partner[b] = Some(a);
            }
        }
        self.user_primary
            .iter()
            .copied()
            .chain(
                self.item_cluster
                    .iter()
                    .map(|&b| item_partner[b].unwrap_or(self.k_user + b)),
            )
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamCount {
    pub codebook_params: usize,
    /// Index storage, one integer per sketch entry; not charged in `reported_params`.
    pub index_ints: usize,
    pub full_params: usize,
    /// One parameter per user for secondary indices.
    pub scu_extra: usize,
    pub reported_params: usize,
    pub ratio: f64,
}

pub fn param_count(assignment: &SketchAssignment, dim: usize) -> ParamCount {
    param_count_for(
        assignment.n_users(),
        assignment.n_items(),
        assignment.k_user + assignment.k_item,
        assignment.scu(),
        dim,
    )
}

/// Accounting from shape alone: `rows` codebook rows in total.
pub fn param_count_for(
    n_users: usize,
    n_items: usize,
    rows: usize,
    scu: bool,
    dim: usize,
) -> ParamCount {
    assert!(dim >= 1, "embedding dimension must be positive");
    let codebook_params = rows * dim;
    let scu_extra = if scu { n_users } else { 0 };
    let full_params = (n_users + n_items) * dim;
    let reported_params = codebook_params + scu_extra;
    ParamCount {
        codebook_params,
        index_ints: n_users + n_items + scu_extra,
        full_params,
        scu_extra,
        reported_params,
        ratio: reported_params as f64 / full_params as f64,
    }
}

/// Compressed embedding table, one row per cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub rows: Array2<f64>,
}

impl Codebook {
    pub fn new(rows: Array2<f64>) -> Result<Self> {
        if rows.ncols() == 0 {
            return Err(Error::Validation(
                "codebook dimension must be at least 1".into(),
            ));
        }
        Ok(Self { rows })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.nrows()
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }
}

/// Multiplies the sketch matrices into the codebooks. A user with a distinct
/// secondary id gets the sum of both rows.
pub fn materialize(
    assignment: &SketchAssignment,
    user_codebook: &Codebook,
    item_codebook: &Codebook,
) -> Result<(Array2<f64>, Array2<f64>)> {
    if user_codebook.n_rows() != assignment.k_user {
        return Err(Error::Validation(format!(
            "user codebook has {} rows, assignment has {} user clusters",
            user_codebook.n_rows(),
            assignment.k_user
        )));
    }
    if item_codebook.n_rows() != assignment.k_item {
        return Err(Error::Validation(format!(
            "item codebook has {} rows, assignment has {} item clusters",
            item_codebook.n_rows(),
            assignment.k_item
        )));
    }
    let mut users = Array2::zeros((assignment.n_users(), user_codebook.dim()));
    for (u, mut row) in users.rows_mut().into_iter().enumerate() {
        let p = assignment.user_primary[u];
        row.assign(&user_codebook.rows.row(p));
        if let Some(s) = assignment.user_secondary.as_ref().map(|sec| sec[u]) {
            if s != p {
                row += &user_codebook.rows.row(s);
            }
        }
    }
    let mut items = Array2::zeros((assignment.n_items(), item_codebook.dim()));
    for (i, mut row) in items.rows_mut().into_iter().enumerate() {
        row.assign(&item_codebook.rows.row(assignment.item_cluster[i]));
    }
    Ok((users, items))
}

fn check_token(token: &str) -> Result<()> {
    if token.is_empty() || token.contains(['\t', '\n', '\r']) {
        return Err(Error::Validation(format!(
            "token {token:?} is empty or contains tab/newline"
        )));
    }
    Ok(())
}

pub fn write_assignment<W: Write>(
    assignment: &SketchAssignment,
    user_tokens: &[String],
    item_tokens: &[String],
    mut sink: W,
) -> Result<()> {
    assignment.validate()?;
    if user_tokens.len() != assignment.n_users() || item_tokens.len() != assignment.n_items() {
        return Err(Error::Validation(format!(
            "token maps cover {}/{} entities, assignment has {}/{}",
            user_tokens.len(),
            item_tokens.len(),
            assignment.n_users(),
            assignment.n_items()
        )));
    }
    if assignment.scheme.is_empty() || assignment.scheme.contains(char::is_whitespace) {
        return Err(Error::Validation(format!(
            "scheme name {:?} must be a single word",
            assignment.scheme
        )));
    }
    writeln!(
        sink,
        "{MAGIC} {VERSION} K_u={} K_v={} gamma={} scu={} scheme={}",
        assignment.k_user,
        assignment.k_item,
        assignment.gamma,
        assignment.scu() as u8,
        assignment.scheme
    )?;
    for (u, token) in user_tokens.iter().enumerate() {
        check_token(token)?;
        match &assignment.user_secondary {
            Some(sec) => writeln!(
                sink,
                "U\t{token}\t{}\t{}",
                assignment.user_primary[u], sec[u]
            )?,
            None => writeln!(sink, "U\t{token}\t{}", assignment.user_primary[u])?,
        }
    }
    for (i, token) in item_tokens.iter().enumerate() {
        check_token(token)?;
        writeln!(sink, "I\t{token}\t{}", assignment.item_cluster[i])?;
    }
    sink.flush()?;
    Ok(())
}

/// Assignment plus the token maps read back from a file.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchFile {
    pub assignment: SketchAssignment,
    pub user_tokens: Vec<String>,
    pub item_tokens: Vec<String>,
}

struct Header {
    k_user: usize,
    k_item: usize,
    gamma: f64,
    scu: bool,
    scheme: String,
}

fn format_err(line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        line,
        message: message.into(),
    }
}

fn parse_header(line: &str) -> Result<Header> {
    let fields: Vec<&str> = line.split(' ').collect();
    if fields.first() != Some(&MAGIC) {
        return Err(format_err(1, "missing #BACOSKETCH header"));
    }
    match fields.get(1) {
        Some(&VERSION) => {}
        Some(v) => return Err(format_err(1, format!("unsupported version {v}"))),
        None => return Err(format_err(1, "missing version")),
    }
    if fields.len() != 7 {
        return Err(format_err(
            1,
            format!("expected 7 header fields, found {}", fields.len()),
        ));
    }
    let value = |idx: usize, key: &str| -> Result<&str> {
        fields[idx]
            .strip_prefix(key)
            .and_then(|rest| rest.strip_prefix('='))
            .ok_or_else(|| format_err(1, format!("expected {key}=<value>, found {}", fields[idx])))
    };
    let int = |idx: usize, key: &str| -> Result<usize> {
        value(idx, key)?
            .parse()
            .map_err(|_| format_err(1, format!("invalid {key}")))
    };
    let k_user = int(2, "K_u")?;
    let k_item = int(3, "K_v")?;
    let gamma: f64 = value(4, "gamma")?
        .parse()
        .map_err(|_| format_err(1, "invalid gamma"))?;
    let scu = match value(5, "scu")? {
        "0" => false,
        "1" => true,
        other => return Err(format_err(1, format!("scu must be 0 or 1, found {other}"))),
    };
    let scheme = value(6, "scheme")?.to_string();
    if scheme.is_empty() {
        return Err(format_err(1, "empty scheme"));
    }
    Ok(Header {
        k_user,
        k_item,
        gamma,
        scu,
        scheme,
    })
}

fn parse_id(field: &str, bound: usize, line: usize) -> Result<usize> {
    let id: usize = field
        .parse()
        .map_err(|_| format_err(line, format!("invalid id {field:?}")))?;
    if id >= bound {
        return Err(format_err(line, format!("id {id} out of range 0..{bound}")));
    }
    Ok(id)
}

pub fn read_assignment<R: BufRead>(source: R) -> Result<SketchFile> {
    let mut lines = source.lines();
    let header = match lines.next() {
        Some(line) => parse_header(&line?)?,
        None => return Err(format_err(1, "empty file")),
    };
    let mut user_tokens = Vec::new();
    let mut item_tokens = Vec::new();
    let mut user_primary = Vec::new();
    let mut user_secondary = Vec::new();
    let mut item_cluster = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        let fields: Vec<&str> = line.split('\t').collect();
        match fields.as_slice() {
            ["U", rest @ ..] => {
                if !item_tokens.is_empty() {
                    return Err(format_err(line_no, "user line after item lines"));
                }
                let expected = if header.scu { 3 } else { 2 };
                if rest.len() != expected {
                    return Err(format_err(
                        line_no,
                        format!(
                            "user line needs {expected} fields after U, found {}",
                            rest.len()
                        ),
                    ));
                }
                check_token(rest[0]).map_err(|e| format_err(line_no, e.to_string()))?;
                user_tokens.push(rest[0].to_string());
                user_primary.push(parse_id(rest[1], header.k_user, line_no)?);
                if header.scu {
                    user_secondary.push(parse_id(rest[2], header.k_user, line_no)?);
                }
            }
            ["I", token, id] => {
                check_token(token).map_err(|e| format_err(line_no, e.to_string()))?;
                item_tokens.push(token.to_string());
                item_cluster.push(parse_id(id, header.k_item, line_no)?);
            }
            _ => return Err(format_err(line_no, format!("malformed line {line:?}"))),
        }
    }
    let assignment = SketchAssignment {
        user_primary,
        user_secondary: header.scu.then_some(user_secondary),
        item_cluster,
        k_user: header.k_user,
        k_item: header.k_item,
        gamma: header.gamma,
        scheme: header.scheme,
    };
    assignment.validate()?;
    Ok(SketchFile {
        assignment,
        user_tokens,
        item_tokens,
    })
}
