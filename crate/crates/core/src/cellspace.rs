//! Cell search space and its 289-bit genotype encoding.
//!
//! A cell is a DAG of at most 7 nodes and 9 edges. Node 0 is the input, the
//! last node is the output, and each intermediate node carries one of three
//! operators. The genotype expands every intermediate position into one slot
//! per operator, giving 1 + 5*3 + 1 = 17 expanded nodes, and flattens the
//! 17x17 adjacency row-major: bit `(i, j)` lives at index `17*i + j`.
//!
//! Slot layout (fixed, genotypes depend on it):
//!
//! | cell position | slot                                   |
//! |---------------|----------------------------------------|
//! | 0 (IN)        | 0                                      |
//! | 1..=5         | `1 + 3*(p-1) + op`, op = 0,1,2 for CONV1X1, CONV3X3, MAXPOOL3X3 |
//! | 6 (OUT)       | 16                                     |
//!
//! A cell with fewer than 7 nodes places its intermediate nodes at positions
//! `1..=num_nodes-2` and its output at position 6.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::bits::{BitString, LengthMismatch};

pub const MAX_NODES: usize = 7;
pub const MAX_EDGES: usize = 9;
pub const INTERMEDIATE_POSITIONS: usize = 5;
pub const OUT_POSITION: usize = 6;
pub const EXPANDED_NODES: usize = 17;
pub const GENOTYPE_BITS: usize = EXPANDED_NODES * EXPANDED_NODES;
pub const GENOTYPE_BYTES: usize = GENOTYPE_BITS.div_ceil(8);
pub const GENOTYPE_HEX_LEN: usize = GENOTYPE_BYTES * 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Op {
    #[serde(rename = "CONV1X1")]
    Conv1x1,
    #[serde(rename = "CONV3X3")]
    Conv3x3,
    #[serde(rename = "MAXPOOL3X3")]
    MaxPool3x3,
}

impl Op {
    pub const ALL: [Op; 3] = [Op::Conv1x1, Op::Conv3x3, Op::MaxPool3x3];

    pub fn index(self) -> usize {
        match self {
            Op::Conv1x1 => 0,
            Op::Conv3x3 => 1,
            Op::MaxPool3x3 => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Op> {
        Op::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Op::Conv1x1 => "CONV1X1",
            Op::Conv3x3 => "CONV3X3",
            Op::MaxPool3x3 => "MAXPOOL3X3",
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Op {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Op::ALL
            .into_iter()
            .find(|op| op.as_str() == s)
            .ok_or_else(|| format!("unknown operator {s:?}"))
    }
}

/// Expanded node index for a cell position and (for intermediate positions)
/// its operator.
pub fn slot(position: usize, op: Option<Op>) -> usize {
    match position {
        0 => 0,
        OUT_POSITION => EXPANDED_NODES - 1,
        p if (1..=INTERMEDIATE_POSITIONS).contains(&p) => {
            let op = op.expect("intermediate positions need an operator");
            1 + 3 * (p - 1) + op.index()
        }
        p => panic!("cell position {p} out of range"),
    }
}

/// Inverse of [`slot`].
pub fn slot_owner(slot: usize) -> (usize, Option<Op>) {
    match slot {
        0 => (0, None),
        s if s == EXPANDED_NODES - 1 => (OUT_POSITION, None),
        s if s < EXPANDED_NODES => {
            let k = s - 1;
            (1 + k / 3, Op::from_index(k % 3))
        }
        s => panic!("slot {s} out of range"),
    }
}

/// A cell: upper-triangular adjacency plus one operator per intermediate
/// node. Serializes as `{"num_nodes", "adjacency", "ops"}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellSpec {
    pub num_nodes: usize,
    pub adjacency: Vec<Vec<bool>>,
    pub ops: Vec<Op>,
}

impl CellSpec {
    /// Builds a cell from an edge list. Edges outside the matrix are ignored
    /// here and caught by [`validate_cell`] only if they fit the shape.
    pub fn from_edges(num_nodes: usize, edges: &[(usize, usize)], ops: Vec<Op>) -> Self {
        let mut adjacency = vec![vec![false; num_nodes]; num_nodes];
        for &(i, j) in edges {
            if i < num_nodes && j < num_nodes {
                adjacency[i][j] = true;
            }
        }
        CellSpec {
            num_nodes,
            adjacency,
            ops,
        }
    }

    /// The smallest legal cell: IN -> OUT.
    pub fn identity() -> Self {
        Self::from_edges(2, &[(0, 1)], Vec::new())
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency
            .iter()
            .map(|row| row.iter().filter(|&&b| b).count())
            .sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, &b)| b)
                .map(move |(j, _)| (i, j))
        })
    }

    /// Cell position of node `node` in the genotype layout.
    pub fn position_of(&self, node: usize) -> usize {
        if node + 1 == self.num_nodes {
            OUT_POSITION
        } else {
            node
        }
    }

    fn op_of(&self, node: usize) -> Option<Op> {
        if node == 0 || node + 1 == self.num_nodes {
            None
        } else {
            self.ops.get(node - 1).copied()
        }
    }

    fn slot_of(&self, node: usize) -> usize {
        slot(self.position_of(node), self.op_of(node))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    TooManyNodes,
    TooManyEdges,
    NotUpperTriangular,
    DanglingNode,
    BadOpCount,
    /// Fewer than two nodes, or an adjacency matrix that is not
    /// `num_nodes x num_nodes`.
    BadShape,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::TooManyNodes => "TOO_MANY_NODES",
            ViolationCode::TooManyEdges => "TOO_MANY_EDGES",
            ViolationCode::NotUpperTriangular => "NOT_UPPER_TRIANGULAR",
            ViolationCode::DanglingNode => "DANGLING_NODE",
            ViolationCode::BadOpCount => "BAD_OP_COUNT",
            ViolationCode::BadShape => "BAD_SHAPE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    fn push(&mut self, code: ViolationCode, detail: impl Into<String>) {
        self.violations.push(Violation {
            code,
            detail: detail.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{}: {}", v.code.as_str(), v.detail)?;
        }
        Ok(())
    }
}

/// Checks every cell invariant and reports all violations found. Never fails.
///
/// Every node, the input and output included, must lie on a directed
/// IN -> OUT path. An isolated intermediate node is therefore dangling, and
/// so is a cell without any IN -> OUT path.
pub fn validate_cell(cell: &CellSpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = cell.num_nodes;

    if n > MAX_NODES {
        report.push(
            ViolationCode::TooManyNodes,
            format!("{n} nodes, at most {MAX_NODES} allowed"),
        );
    }
    if cell.ops.len() + 2 != n {
        report.push(
            ViolationCode::BadOpCount,
            format!("{} ops for {n} nodes", cell.ops.len()),
        );
    }
    let square = cell.adjacency.len() == n && cell.adjacency.iter().all(|r| r.len() == n);
    if n < 2 || !square {
        report.push(
            ViolationCode::BadShape,
            format!(
                "num_nodes {n} with a {}-row adjacency matrix",
                cell.adjacency.len()
            ),
        );
        return report;
    }

    let edges = cell.edge_count();
    if edges > MAX_EDGES {
        report.push(
            ViolationCode::TooManyEdges,
            format!("{edges} edges, at most {MAX_EDGES} allowed"),
        );
    }
    for (i, j) in cell.edges().filter(|(i, j)| i >= j) {
        report.push(
            ViolationCode::NotUpperTriangular,
            format!("edge ({i}, {j}) on or below the diagonal"),
        );
    }

    let (from_in, to_out) = reachability(cell);
    for node in 0..n {
        if !(from_in[node] && to_out[node]) {
            report.push(
                ViolationCode::DanglingNode,
                format!("node {node} is not on an IN->OUT path"),
            );
        }
    }
    report
}

// Forward reachability from IN and backward reachability to OUT, using only
// upper-triangular edges.
fn reachability(cell: &CellSpec) -> (Vec<bool>, Vec<bool>) {
    let n = cell.num_nodes;
    let mut from_in = vec![false; n];
    from_in[0] = true;
    for i in 0..n {
        if from_in[i] {
            for j in i + 1..n {
                if cell.adjacency[i][j] {
                    from_in[j] = true;
                }
            }
        }
    }
    let mut to_out = vec![false; n];
    to_out[n - 1] = true;
    for i in (0..n).rev() {
        if (i + 1..n).any(|j| cell.adjacency[i][j] && to_out[j]) {
            to_out[i] = true;
        }
    }
    (from_in, to_out)
}

/// Flattened adjacency of the 17-node expanded cell graph.
///
/// Text form: 74 lowercase hex digits (37 bytes), most significant bit
/// first; bit 0 is the MSB of byte 0 and the trailing 7 bits are zero.
/// Ordering is lexicographic on the bit sequence, which coincides with the
/// ordering of the hex strings.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Genotype([u8; GENOTYPE_BYTES]);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenotypeParseError {
    #[error("expected {GENOTYPE_HEX_LEN} hex characters, got {0}")]
    BadLength(usize),
    #[error("invalid hex character {0:?}")]
    BadChar(char),
    #[error("padding bits after bit {GENOTYPE_BITS} must be zero")]
    NonZeroPadding,
}

impl Genotype {
    pub const BITS: usize = GENOTYPE_BITS;

    pub fn zero() -> Self {
        Genotype([0; GENOTYPE_BYTES])
    }

    pub fn index(row: usize, col: usize) -> usize {
        debug_assert!(row < EXPANDED_NODES && col < EXPANDED_NODES);
        EXPANDED_NODES * row + col
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < GENOTYPE_BITS, "bit {i} out of range");
        (self.0[i / 8] >> (7 - i % 8)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < GENOTYPE_BITS, "bit {i} out of range");
        let mask = 1u8 << (7 - i % 8);
        if value {
            self.0[i / 8] |= mask;
        } else {
            self.0[i / 8] &= !mask;
        }
    }

    pub fn with_bits(indices: &[usize]) -> Self {
        let mut g = Genotype::zero();
        for &i in indices {
            g.set(i, true);
        }
        g
    }

    pub fn flip(&self, i: usize) -> Self {
        let mut g = *self;
        g.set(i, !self.get(i));
        g
    }

    pub fn popcount(&self) -> u32 {
        self.0.iter().map(|b| b.count_ones()).sum()
    }

    /// Indices of set bits in increasing order.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(byte_idx, &byte)| {
            (0..8)
                .filter(move |k| (byte >> (7 - k)) & 1 == 1)
                .map(move |k| byte_idx * 8 + k)
        })
    }

    pub fn hamming(&self, other: &Genotype) -> u32 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a ^ b).count_ones())
            .sum()
    }

    pub fn to_hex(&self) -> String {
        use std::fmt::Write;
        let mut s = String::with_capacity(GENOTYPE_HEX_LEN);
        for b in self.0 {
            write!(s, "{b:02x}").unwrap();
        }
        s
    }

    pub fn from_hex(s: &str) -> Result<Self, GenotypeParseError> {
        if s.len() != GENOTYPE_HEX_LEN {
            return Err(GenotypeParseError::BadLength(s.chars().count()));
        }
        let mut bytes = [0u8; GENOTYPE_BYTES];
        let digits: Vec<char> = s.chars().collect();
        for (k, pair) in digits.chunks(2).enumerate() {
            let hi = hex_value(pair[0])?;
            let lo = hex_value(pair[1])?;
            bytes[k] = (hi << 4) | lo;
        }
        let padding = GENOTYPE_BYTES * 8 - GENOTYPE_BITS;
        if bytes[GENOTYPE_BYTES - 1] & ((1u8 << padding) - 1) != 0 {
            return Err(GenotypeParseError::NonZeroPadding);
        }
        Ok(Genotype(bytes))
    }

    pub fn as_bytes(&self) -> &[u8; GENOTYPE_BYTES] {
        &self.0
    }
}

fn hex_value(c: char) -> Result<u8, GenotypeParseError> {
    match c {
        '0'..='9' => Ok(c as u8 - b'0'),
        'a'..='f' => Ok(c as u8 - b'a' + 10),
        _ => Err(GenotypeParseError::BadChar(c)),
    }
}

impl fmt::Display for Genotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for Genotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Genotype({})", self.to_hex())
    }
}

impl FromStr for Genotype {
    type Err = GenotypeParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Genotype::from_hex(s)
    }
}

impl Serialize for Genotype {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Genotype {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Genotype::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

impl BitString for Genotype {
    fn bit_len(&self) -> usize {
        GENOTYPE_BITS
    }

    fn bit(&self, i: usize) -> bool {
        self.get(i)
    }

    fn flipped(&self, i: usize) -> Self {
        self.flip(i)
    }

    fn distance(&self, other: &Self) -> Result<u32, LengthMismatch> {
        Ok(self.hamming(other))
    }

    fn label(&self) -> String {
        self.to_hex()
    }

    fn count_ones(&self) -> u32 {
        self.popcount()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("INVALID_CELL: {0}")]
pub struct InvalidCell(pub ValidationReport);

/// Encodes a valid cell: one set bit per edge, at the expanded slots of its
/// endpoints.
pub fn encode(cell: &CellSpec) -> Result<Genotype, InvalidCell> {
    let report = validate_cell(cell);
    if !report.is_valid() {
        return Err(InvalidCell(report));
    }
    let mut g = Genotype::zero();
    for (i, j) in cell.edges() {
        g.set(Genotype::index(cell.slot_of(i), cell.slot_of(j)), true);
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("SLOT_CONFLICT: position {position} has edges on slots {slots:?}")]
    SlotConflict { position: usize, slots: Vec<usize> },
    #[error("NOT_A_DAG: edge from position {from} to position {to}")]
    NotADag { from: usize, to: usize },
    #[error("INVALID_STRUCTURE: {0}")]
    InvalidStructure(String),
}

impl DecodeError {
    pub fn code(&self) -> &'static str {
        match self {
            DecodeError::SlotConflict { .. } => "SLOT_CONFLICT",
            DecodeError::NotADag { .. } => "NOT_A_DAG",
            DecodeError::InvalidStructure(_) => "INVALID_STRUCTURE",
        }
    }
}

/// Reconstructs the cell a genotype encodes.
///
/// Checks run in a fixed order so every undecodable vector maps to exactly
/// one error: operator slot conflicts first, then backward or self edges
/// between positions, then cell-level structure (non-contiguous positions,
/// edge budget, dangling nodes).
pub fn decode(g: &Genotype) -> Result<CellSpec, DecodeError> {
    let mut active: [Option<Op>; INTERMEDIATE_POSITIONS + 1] = [None; INTERMEDIATE_POSITIONS + 1];
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(MAX_EDGES);

    for bit in g.ones() {
        let (row, col) = (bit / EXPANDED_NODES, bit % EXPANDED_NODES);
        let from = slot_owner(row);
        let to = slot_owner(col);
        for (position, op) in [from, to] {
            if let Some(op) = op {
                match active[position] {
                    Some(existing) if existing != op => {
                        let mut slots =
                            vec![slot(position, Some(existing)), slot(position, Some(op))];
                        slots.sort_unstable();
                        return Err(DecodeError::SlotConflict { position, slots });
                    }
                    _ => active[position] = Some(op),
                }
            }
        }
        edges.push((from.0, to.0));
    }

    if let Some(&(from, to)) = edges.iter().find(|(p, q)| p >= q) {
        return Err(DecodeError::NotADag { from, to });
    }

    let used: Vec<usize> = (1..=INTERMEDIATE_POSITIONS)
        .filter(|&p| active[p].is_some())
        .collect();
    if used.iter().enumerate().any(|(k, &p)| p != k + 1) {
        return Err(DecodeError::InvalidStructure(format!(
            "intermediate positions {used:?} are not contiguous from 1"
        )));
    }

    let num_nodes = used.len() + 2;
    let node_of = |position: usize| {
        if position == OUT_POSITION {
            num_nodes - 1
        } else {
            position
        }
    };
    let node_edges: Vec<(usize, usize)> = edges
        .iter()
        .map(|&(p, q)| (node_of(p), node_of(q)))
        .collect();
    let ops = used.iter().map(|&p| active[p].unwrap()).collect();
    let cell = CellSpec::from_edges(num_nodes, &node_edges, ops);
    let report = validate_cell(&cell);
    if !report.is_valid() {
        return Err(DecodeError::InvalidStructure(report.to_string()));
    }
    Ok(cell)
}

pub fn hamming(a: &Genotype, b: &Genotype) -> u32 {
    a.hamming(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NeighborMode {
    /// All 289 single-bit flips.
    Raw,
    /// Only the flips that decode.
    #[default]
    Valid,
}

/// Hamming-1 neighborhood, in increasing flipped-bit order.
pub fn neighbors(g: &Genotype, mode: NeighborMode) -> Vec<Genotype> {
    let flips = (0..GENOTYPE_BITS).map(|i| g.flip(i));
    match mode {
        NeighborMode::Raw => flips.collect(),
        NeighborMode::Valid if decode(g).is_ok() => valid_flips_of_valid(g),
        NeighborMode::Valid => flips.filter(|y| decode(y).is_ok()).collect(),
    }
}

// From a valid genotype, a flip touching an unused slot leaves that node
// without a path to IN or OUT, and a self-loop is never valid. Only flips
// between two used slots need decoding; ascending bit order is kept.
fn valid_flips_of_valid(g: &Genotype) -> Vec<Genotype> {
    let mut used = [false; EXPANDED_NODES];
    for bit in g.ones() {
        used[bit / EXPANDED_NODES] = true;
        used[bit % EXPANDED_NODES] = true;
    }
    let active: Vec<usize> = (0..EXPANDED_NODES).filter(|&s| used[s]).collect();
    let mut out = Vec::new();
    for &i in &active {
        for &j in &active {
            if i != j {
                let y = g.flip(Genotype::index(i, j));
                if decode(&y).is_ok() {
                    out.push(y);
                }
            }
        }
    }
    out
}
