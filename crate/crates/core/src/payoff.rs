//! Payoff containers and their on-disk formats.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Square single-population payoff matrix, `M(σ, τ)` is the payoff to the
/// row strategy `σ` when it meets the column strategy `τ`.
///
/// Entries are stored row-major, so entry index `σ * S + τ` addresses `M(σ, τ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PayoffMatrix {
    size: usize,
    values: Vec<f64>,
}

impl PayoffMatrix {
    pub fn new(size: usize, values: Vec<f64>) -> Result<Self> {
        if size == 0 {
            return Err(Error::invalid("payoff matrix needs at least one strategy"));
        }
        if values.len() != size * size {
            return Err(Error::shape(format!("{} entries", size * size), values.len()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("payoff {v} is not finite")));
        }
        Ok(Self { size, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let size = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != size) {
            return Err(Error::shape(format!("{size} columns"), r.len()));
        }
        Self::new(size, rows.concat())
    }

    pub fn constant(size: usize, value: f64) -> Result<Self> {
        Self::new(size, vec![value; size * size])
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn entry_count(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.size + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.values[row * self.size + col] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.size).map(<[f64]>::to_vec).collect()
    }

    /// Apply `f` to every entry; the result must stay finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.size, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.size {
            return Err(Error::shape(self.size, perm.len()));
        }
        let s = self.size;
        let mut out = vec![0.0; s * s];
        for i in 0..s {
            for j in 0..s {
                out[perm[i] * s + perm[j]] = self.get(i, j);
            }
        }
        Self::new(s, out)
    }
}

impl fmt::Display for PayoffMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.values.chunks(self.size) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.4}")).collect();
            writeln!(f, "{}", cells.join(" "))?;
        }
        Ok(())
    }
}

/// Entry index helpers for an `S × S` layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EntryLayout {
    pub size: usize,
}

impl EntryLayout {
    pub fn new(size: usize) -> Self {
        Self { size }
    }

    #[inline]
    pub fn index(self, row: usize, col: usize) -> usize {
        row * self.size + col
    }

    #[inline]
    pub fn coords(self, entry: usize) -> (usize, usize) {
        (entry / self.size, entry % self.size)
    }

    #[inline]
    pub fn transpose(self, entry: usize) -> usize {
        let (r, c) = self.coords(entry);
        self.index(c, r)
    }

    pub fn entry_count(self) -> usize {
        self.size * self.size
    }

    pub fn is_diagonal(self, entry: usize) -> bool {
        let (r, c) = self.coords(entry);
        r == c
    }
}

/// Expected payoffs of a K-player game. `values[profile * K + k]` is the payoff
/// to player `k` at the strategy profile with mixed-radix index `profile`
/// (last player fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct PayoffTensor {
    strategies: Vec<usize>,
    values: Vec<f64>,
}

impl PayoffTensor {
    pub fn new(strategies: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if strategies.is_empty() || strategies.contains(&0) {
            return Err(Error::invalid("every player needs at least one strategy"));
        }
        let profiles: usize = strategies.iter().product();
        let expected = profiles * strategies.len();
        if values.len() != expected {
            return Err(Error::shape(format!("{expected} payoffs"), values.len()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("payoff {v} is not finite")));
        }
        Ok(Self { strategies, values })
    }

    /// Two-player symmetric game induced by a single-population matrix:
    /// player 1 receives `M(σ1, σ2)`, player 2 receives `M(σ2, σ1)`.
    pub fn symmetric(matrix: &PayoffMatrix) -> Self {
        let s = matrix.size();
        let mut values = Vec::with_capacity(2 * s * s);
        for a in 0..s {
            for b in 0..s {
                values.push(matrix.get(a, b));
                values.push(matrix.get(b, a));
            }
        }
        Self { strategies: vec![s, s], values }
    }

    pub fn num_players(&self) -> usize {
        self.strategies.len()
    }

    pub fn strategies(&self) -> &[usize] {
        &self.strategies
    }

    pub fn profile_count(&self) -> usize {
        self.values.len() / self.strategies.len()
    }

    #[inline]
    pub fn payoff(&self, profile: usize, player: usize) -> f64 {
        self.values[profile * self.strategies.len() + player]
    }

    pub fn profile_coords(&self, mut profile: usize) -> Vec<usize> {
        let mut coords = vec![0; self.strategies.len()];
        for (k, &s) in self.strategies.iter().enumerate().rev() {
            coords[k] = profile % s;
            profile /= s;
        }
        coords
    }

    pub fn profile_index(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .zip(&self.strategies)
            .fold(0, |acc, (&c, &s)| acc * s + c)
    }

    /// Player-one payoff matrix; only defined for two players with equal
    /// strategy counts.
    pub fn single_population(&self) -> Result<PayoffMatrix> {
        match self.strategies.as_slice() {
            [a, b] if a == b => {
                let values = (0..a * a).map(|p| self.payoff(p, 0)).collect();
                PayoffMatrix::new(*a, values)
            }
            other => Err(Error::shape("two players with equal strategy counts", format!("{other:?}"))),
        }
    }
}

/// Payoffs loaded from disk: a square single-population matrix or a full
/// per-player tensor.
#[derive(Clone, Debug, PartialEq)]
pub enum Payoffs {
    Single(PayoffMatrix),
    Multi(PayoffTensor),
}

#[derive(Debug, Serialize, Deserialize)]
struct PayoffDocument {
    num_players: usize,
    strategies: Vec<usize>,
    values: Value,
}

fn flatten_numbers(value: &Value, depth: usize, out: &mut Vec<f64>, shape: &mut Vec<usize>) -> Result<()> {
    match value {
        Value::Array(items) => {
            if shape.len() == depth {
                shape.push(items.len());
            } else if shape[depth] != items.len() {
                return Err(Error::Parse(format!("ragged array at depth {depth}")));
            }
            items.iter().try_for_each(|v| flatten_numbers(v, depth + 1, out, shape))
        }
        Value::Number(n) => {
            if shape.len() != depth {
                return Err(Error::Parse("inconsistent nesting depth".into()));
            }
            out.push(n.as_f64().ok_or_else(|| Error::Parse(format!("bad number {n}")))?);
            Ok(())
        }
        other => Err(Error::Parse(format!("expected number or array, found {other}"))),
    }
}

impl Payoffs {
    /// Parse the JSON payoff document. A two-dimensional `values` array is a
    /// single-population matrix; a `(K + 1)`-dimensional array indexed by
    /// strategy profile then player is a full tensor.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: PayoffDocument = serde_json::from_str(text)?;
        if doc.strategies.len() != doc.num_players {
            return Err(Error::shape(format!("{} strategy counts", doc.num_players), doc.strategies.len()));
        }
        let mut values = Vec::new();
        let mut shape = Vec::new();
        flatten_numbers(&doc.values, 0, &mut values, &mut shape)?;
        if shape.len() == 2 && doc.num_players == 2 {
            if shape != doc.strategies || shape[0] != shape[1] {
                return Err(Error::shape(format!("{:?}", doc.strategies), format!("{shape:?}")));
            }
            return Ok(Payoffs::Single(PayoffMatrix::new(shape[0], values)?));
        }
        let mut expected = doc.strategies.clone();
        expected.push(doc.num_players);
        if shape != expected {
            return Err(Error::shape(format!("{expected:?}"), format!("{shape:?}")));
        }
        Ok(Payoffs::Multi(PayoffTensor::new(doc.strategies, values)?))
    }

    /// Parse an `S × S` CSV matrix (no header).
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            let row = record
                .iter()
                .map(|c| c.parse::<f64>().map_err(|e| Error::Parse(format!("{c:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(Payoffs::Single(PayoffMatrix::from_rows(&rows)?))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Self::from_csv_str(&text),
            _ => Self::from_json_str(&text),
        }
    }

    pub fn to_json_value(&self) -> Value {
        match self {
            Payoffs::Single(m) => serde_json::json!({
                "num_players": 2,
                "strategies": [m.size(), m.size()],
                "values": m.rows(),
            }),
            Payoffs::Multi(t) => {
                fn nest(t: &PayoffTensor, prefix: &mut Vec<usize>) -> Value {
                    let k = prefix.len();
                    if k == t.num_players() {
                        let p = t.profile_index(prefix);
                        return Value::from((0..k).map(|i| t.payoff(p, i)).collect::<Vec<_>>());
                    }
                    let items = (0..t.strategies()[k])
                        .map(|s| {
                            prefix.push(s);
                            let v = nest(t, prefix);
                            prefix.pop();
                            v
                        })
                        .collect::<Vec<_>>();
                    Value::Array(items)
                }
                serde_json::json!({
                    "num_players": t.num_players(),
                    "strategies": t.strategies(),
                    "values": nest(t, &mut Vec::new()),
                })
            }
        }
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(&self.to_json_value())?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_and_bad_shape() {
        assert!(PayoffMatrix::new(2, vec![0.0, 1.0, f64::NAN, 0.0]).is_err());
        assert!(PayoffMatrix::new(2, vec![0.0; 3]).is_err());
        assert!(PayoffMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn layout_transpose() {
        let l = EntryLayout::new(4);
        assert_eq!(l.index(1, 3), 7);
        assert_eq!(l.coords(7), (1, 3));
        assert_eq!(l.transpose(7), 13);
        assert!(l.is_diagonal(5));
    }

    #[test]
    fn json_single_and_multi() {
        let single = r#"{"num_players": 2, "strategies": [2, 2], "values": [[0.5, 1.0], [0.0, 0.5]]}"#;
        match Payoffs::from_json_str(single).unwrap() {
            Payoffs::Single(m) => assert_eq!(m.get(0, 1), 1.0),
            other => panic!("{other:?}"),
        }
        let multi = r#"{"num_players": 2, "strategies": [2, 3],
            "values": [[[1,0],[2,0],[3,0]], [[4,1],[5,1],[6,1]]]}"#;
        match Payoffs::from_json_str(multi).unwrap() {
            Payoffs::Multi(t) => {
                assert_eq!(t.profile_count(), 6);
                assert_eq!(t.payoff(t.profile_index(&[1, 2]), 0), 6.0);
                assert_eq!(t.payoff(t.profile_index(&[1, 2]), 1), 1.0);
                let round = Payoffs::from_json_str(&Payoffs::Multi(t.clone()).to_json_value().to_string()).unwrap();
                assert_eq!(round, Payoffs::Multi(t));
            }
            other => panic!("{other:?}"),
        }
        let bad = r#"{"num_players": 2, "strategies": [2, 2], "values": [[0.5, 1.0], [0.0]]}"#;
        assert!(Payoffs::from_json_str(bad).is_err());
    }

    #[test]
    fn csv_matrix() {
        let m = Payoffs::from_csv_str("0.5, 1\n0, 0.5\n").unwrap();
        assert_eq!(m, Payoffs::Single(PayoffMatrix::from_rows(&[vec![0.5, 1.0], vec![0.0, 0.5]]).unwrap()));
        assert!(Payoffs::from_csv_str("1,2,3\n4,5,6\n").is_err());
    }

    #[test]
    fn symmetric_tensor_round_trip() {
        let m = PayoffMatrix::from_rows(&[vec![0.5, 0.9], vec![0.1, 0.5]]).unwrap();
        let t = PayoffTensor::symmetric(&m);
        assert_eq!(t.payoff(t.profile_index(&[0, 1]), 1), 0.1);
        assert_eq!(t.single_population().unwrap(), m);
        let three = PayoffTensor::new(vec![2, 2, 2], vec![0.0; 24]).unwrap();
        assert!(three.single_population().is_err());
    }
}
