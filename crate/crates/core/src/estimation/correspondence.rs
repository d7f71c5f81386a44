use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// A matched pair: `source` in the target image, `dest` in the reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub source: Point,
    pub dest: Point,
    pub weight: f64,
}

impl Correspondence {
    pub fn new(source: Point, dest: Point) -> Self {
        Correspondence {
            source,
            dest,
            weight: 1.0,
        }
    }

    pub fn reversed(&self) -> Self {
        Correspondence {
            source: self.dest,
            dest: self.source,
            weight: self.weight,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorrespondenceSet {
    pub items: Vec<Correspondence>,
    pub inlier_mask: Option<Vec<bool>>,
}

/// Which image the `s*` fields of a correspondence file refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum PairOrder {
    #[default]
    #[serde(rename = "target->reference")]
    TargetToReference,
    #[serde(rename = "reference->target")]
    ReferenceToTarget,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonRecord {
    sx: f64,
    sy: f64,
    dx: f64,
    dy: f64,
    #[serde(default)]
    w: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonHeader {
    order: PairOrder,
}

impl CorrespondenceSet {
    pub fn new(items: Vec<Correspondence>) -> Self {
        CorrespondenceSet {
            items,
            inlier_mask: None,
        }
    }

    pub fn with_mask(items: Vec<Correspondence>, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != items.len() {
            return Err(Error::InvalidInput(format!(
                "mask length {} differs from {} correspondences",
                mask.len(),
                items.len()
            )));
        }
        Ok(CorrespondenceSet {
            items,
            inlier_mask: Some(mask),
        })
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Point, Point)>) -> Self {
        Self::new(pairs.into_iter().map(|(s, d)| Correspondence::new(s, d)).collect())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.items.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn reversed(&self) -> Self {
        CorrespondenceSet {
            items: self.items.iter().map(Correspondence::reversed).collect(),
            inlier_mask: self.inlier_mask.clone(),
        }
    }

    /// Items whose mask entry is set; all items when no mask is present.
    pub fn inliers(&self) -> Vec<Correspondence> {
        match &self.inlier_mask {
            Some(mask) => self
                .items
                .iter()
                .zip(mask)
                .filter(|(_, &m)| m)
                .map(|(c, _)| *c)
                .collect(),
            None => self.items.clone(),
        }
    }

    pub fn map_points(&self, f: impl Fn(Point) -> Point, g: impl Fn(Point) -> Point) -> Self {
        CorrespondenceSet {
            items: self
                .items
                .iter()
                .map(|c| Correspondence {
                    source: f(c.source),
                    dest: g(c.dest),
                    weight: c.weight,
                })
                .collect(),
            inlier_mask: self.inlier_mask.clone(),
        }
    }

    /// Parses JSON lines `{"sx":..,"sy":..,"dx":..,"dy":..,"w":..}`. An
    /// optional first line `{"order":"reference->target"}` flips roles;
    /// without it the `s*` fields belong to the target.
    pub fn parse_jsonl(text: &str) -> Result<Self> {
        let mut order = PairOrder::default();
        let mut items = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if items.is_empty() && line.contains("\"order\"") {
                let h: JsonHeader = serde_json::from_str(line)
                    .map_err(|e| Error::InvalidInput(format!("line {}: {e}", lineno + 1)))?;
                order = h.order;
                continue;
            }
            let r: JsonRecord = serde_json::from_str(line)
                .map_err(|e| Error::InvalidInput(format!("line {}: {e}", lineno + 1)))?;
            let c = Correspondence {
                source: Point::new(r.sx, r.sy),
                dest: Point::new(r.dx, r.dy),
                weight: r.w.unwrap_or(1.0),
            };
            if !c.source.is_finite() || !c.dest.is_finite() || !(c.weight >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "line {}: coordinates must be finite and weight non-negative",
                    lineno + 1
                )));
            }
            items.push(c);
        }
        let set = CorrespondenceSet::new(items);
        Ok(match order {
            PairOrder::TargetToReference => set,
            PairOrder::ReferenceToTarget => set.reversed(),
        })
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::from("{\"order\":\"target->reference\"}\n");
        for c in &self.items {
            out.push_str(&format!(
                "{{\"sx\":{},\"sy\":{},\"dx\":{},\"dy\":{},\"w\":{}}}\n",
                c.source.x, c.source.y, c.dest.x, c.dest.y, c.weight
            ));
        }
        out
    }

    /// Row-aligned `x,y` files, one for each image. A non-numeric first
    /// line is treated as a header.
    pub fn parse_csv_pair(target: &str, reference: &str) -> Result<Self> {
        let a = parse_xy_csv(target)?;
        let b = parse_xy_csv(reference)?;
        if a.len() != b.len() {
            return Err(Error::InvalidInput(format!(
                "csv files have {} and {} rows",
                a.len(),
                b.len()
            )));
        }
        Ok(Self::from_pairs(a.into_iter().zip(b)))
    }

    pub fn read_jsonl(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_jsonl(&text)
    }

    pub fn read_csv_pair(target: &Path, reference: &Path) -> Result<Self> {
        let a = std::fs::read_to_string(target).map_err(|e| Error::io(target, e))?;
        let b = std::fs::read_to_string(reference).map_err(|e| Error::io(reference, e))?;
        Self::parse_csv_pair(&a, &b)
    }
}

fn parse_xy_csv(text: &str) -> Result<Vec<Point>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Option<Vec<f64>> = fields.iter().map(|f| f.parse().ok()).collect();
        match parsed {
            Some(v) if v.len() == 2 && v.iter().all(|x| x.is_finite()) => out.push(Point::new(v[0], v[1])),
            None if i == 0 => continue,
            _ => {
                return Err(Error::InvalidInput(format!(
                    "csv line {}: expected `x,y`",
                    i + 1
                )))
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_default_order_and_weight() {
        let s = CorrespondenceSet::parse_jsonl(
            "{\"sx\":1,\"sy\":2,\"dx\":3,\"dy\":4}\n\n{\"sx\":5,\"sy\":6,\"dx\":7,\"dy\":8,\"w\":0.5}\n",
        )
        .unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.items[0].source, Point::new(1.0, 2.0));
        assert_eq!(s.items[0].weight, 1.0);
        assert_eq!(s.items[1].weight, 0.5);
    }

    #[test]
    fn jsonl_reference_first_header_flips() {
        let s = CorrespondenceSet::parse_jsonl(
            "{\"order\":\"reference->target\"}\n{\"sx\":1,\"sy\":2,\"dx\":3,\"dy\":4}\n",
        )
        .unwrap();
        assert_eq!(s.items[0].source, Point::new(3.0, 4.0));
        assert_eq!(s.items[0].dest, Point::new(1.0, 2.0));
    }

    #[test]
    fn jsonl_rejects_unknown_fields_and_bad_order() {
        assert!(CorrespondenceSet::parse_jsonl("{\"sx\":1,\"sy\":2,\"dx\":3,\"dy\":4,\"z\":1}").is_err());
        assert!(CorrespondenceSet::parse_jsonl("{\"order\":\"sideways\"}").is_err());
        assert!(CorrespondenceSet::parse_jsonl("{\"sx\":1,\"sy\":2,\"dx\":3,\"dy\":4,\"w\":-1}").is_err());
    }

    #[test]
    fn jsonl_writer_round_trips() {
        let s = CorrespondenceSet::from_pairs([
            (Point::new(0.5, 1.25), Point::new(300.5, 1.0)),
            (Point::new(-3.0, 7.0), Point::new(297.0, 7.5)),
        ]);
        assert_eq!(CorrespondenceSet::parse_jsonl(&s.to_jsonl()).unwrap(), s);
    }

    #[test]
    fn csv_pair_with_header() {
        let s = CorrespondenceSet::parse_csv_pair("x,y\n1,2\n3,4\n", "10,20\n30,40\n").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.items[1].dest, Point::new(30.0, 40.0));
        assert!(CorrespondenceSet::parse_csv_pair("1,2\n", "1,2\n3,4\n").is_err());
        assert!(CorrespondenceSet::parse_csv_pair("1,2\nfoo\n", "1,2\n3,4\n").is_err());
    }

    #[test]
    fn mask_length_checked() {
        let items = vec![Correspondence::new(Point::default(), Point::default())];
        assert!(CorrespondenceSet::with_mask(items.clone(), vec![true, false]).is_err());
        assert!(CorrespondenceSet::with_mask(items, vec![true]).is_ok());
    }
}
