//! Loading, validation, and cohort alignment of multi-omics matrices and
//! phenotype annotations.
//!
//! Canonical orientation is subjects-as-rows. Missing values survive loading
//! (stored as NaN) and are resolved only by [`align_cohort`], which drops
//! incomplete subjects after aliquot aggregation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Subjects x features numeric matrix for one omics modality.
///
/// `values` is row-major; NaN marks a missing cell (only legal before
/// alignment). Subject IDs may repeat before alignment (aliquots).
#[derive(Debug, Clone, PartialEq)]
pub struct OmicsMatrix {
    pub subject_ids: Vec<String>,
    pub feature_names: Vec<String>,
    pub modality: String,
    pub values: Vec<f64>,
}

impl OmicsMatrix {
    pub fn new(
        subject_ids: Vec<String>,
        feature_names: Vec<String>,
        modality: impl Into<String>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.len() != subject_ids.len() * feature_names.len() {
            return Err(Error::invalid(format!(
                "matrix size {} does not match {} subjects x {} features",
                values.len(),
                subject_ids.len(),
                feature_names.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for f in &feature_names {
            if !seen.insert(f.as_str()) {
                return Err(Error::invalid(format!("duplicate feature name {f:?}")));
            }
        }
        Ok(OmicsMatrix {
            subject_ids,
            feature_names,
            modality: modality.into(),
            values,
        })
    }

    pub fn n_subjects(&self) -> usize {
        self.subject_ids.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    #[inline]
    pub fn get(&self, subject: usize, feature: usize) -> f64 {
        self.values[subject * self.n_features() + feature]
    }

    /// Column view copied out as a Vec (features are columns).
    pub fn column(&self, feature: usize) -> Vec<f64> {
        (0..self.n_subjects())
            .map(|s| self.get(s, feature))
            .collect()
    }

    pub fn row(&self, subject: usize) -> &[f64] {
        let f = self.n_features();
        &self.values[subject * f..(subject + 1) * f]
    }

    pub fn has_missing(&self) -> bool {
        self.values.iter().any(|v| v.is_nan())
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|f| f == name)
    }

    /// New matrix restricted to the named features, in the given order.
    pub fn select_features(&self, names: &[String]) -> Result<OmicsMatrix> {
        let mut idx = Vec::with_capacity(names.len());
        for n in names {
            idx.push(
                self.feature_index(n)
                    .ok_or_else(|| Error::invalid(format!("unknown feature {n:?}")))?,
            );
        }
        let mut values = Vec::with_capacity(self.n_subjects() * idx.len());
        for s in 0..self.n_subjects() {
            for &f in &idx {
                values.push(self.get(s, f));
            }
        }
        OmicsMatrix::new(
            self.subject_ids.clone(),
            names.to_vec(),
            self.modality.clone(),
            values,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    SubjectsAsRows,
    FeaturesAsRows,
}

/// Per-subject outcome: class labels or a continuous value.
#[derive(Debug, Clone, PartialEq)]
pub enum PhenotypeValues {
    Categorical {
        class_names: Vec<String>,
        labels: Vec<usize>,
    },
    Continuous(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhenotypeVector {
    pub subject_ids: Vec<String>,
    pub values: PhenotypeValues,
}

impl PhenotypeVector {
    pub fn len(&self) -> usize {
        self.subject_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subject_ids.is_empty()
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self.values, PhenotypeValues::Categorical { .. })
    }

    pub fn n_classes(&self) -> Option<usize> {
        match &self.values {
            PhenotypeValues::Categorical { class_names, .. } => Some(class_names.len()),
            PhenotypeValues::Continuous(_) => None,
        }
    }

    /// Outcome as numbers: class indices for categorical, raw values otherwise.
    pub fn numeric(&self) -> Vec<f64> {
        match &self.values {
            PhenotypeValues::Categorical { labels, .. } => {
                labels.iter().map(|&l| l as f64).collect()
            }
            PhenotypeValues::Continuous(v) => v.clone(),
        }
    }

    pub fn labels(&self) -> Result<&[usize]> {
        match &self.values {
            PhenotypeValues::Categorical { labels, .. } => Ok(labels),
            PhenotypeValues::Continuous(_) => Err(Error::invalid("categorical phenotype required")),
        }
    }

    fn reindex(&self, order: &[usize]) -> PhenotypeVector {
        let subject_ids = order.iter().map(|&i| self.subject_ids[i].clone()).collect();
        let values = match &self.values {
            PhenotypeValues::Categorical {
                class_names,
                labels,
            } => PhenotypeValues::Categorical {
                class_names: class_names.clone(),
                labels: order.iter().map(|&i| labels[i]).collect(),
            },
            PhenotypeValues::Continuous(v) => {
                PhenotypeValues::Continuous(order.iter().map(|&i| v[i]).collect())
            }
        };
        PhenotypeVector {
            subject_ids,
            values,
        }
    }
}

/// Record of what alignment dropped or merged.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Provenance {
    pub aggregated_subjects: Vec<String>,
    pub dropped_not_shared: Vec<String>,
    pub dropped_incomplete: Vec<String>,
}

impl Provenance {
    pub fn report(&self) -> String {
        let mut s = String::new();
        writeln!(s, "alignment provenance").unwrap();
        writeln!(
            s,
            "aggregated aliquots: {}",
            self.aggregated_subjects.join(", ")
        )
        .unwrap();
        writeln!(
            s,
            "dropped (not shared): {}",
            self.dropped_not_shared.join(", ")
        )
        .unwrap();
        writeln!(
            s,
            "dropped (incomplete): {}",
            self.dropped_incomplete.join(", ")
        )
        .unwrap();
        s
    }
}

/// Modalities plus phenotype on one shared, lexicographically ordered cohort.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedDataset {
    pub modalities: Vec<OmicsMatrix>,
    pub phenotype: PhenotypeVector,
    pub provenance: Provenance,
}

impl AlignedDataset {
    pub fn subject_ids(&self) -> &[String] {
        &self.phenotype.subject_ids
    }

    pub fn modality(&self, tag: &str) -> Option<&OmicsMatrix> {
        self.modalities.iter().find(|m| m.modality == tag)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AliquotPolicy {
    Average,
    Error,
}

/// Parse one numeric cell; empty string means missing (NaN).
fn parse_cell(raw: &str, path: &Path, row: usize, col: usize) -> Result<f64> {
    let t = raw.trim();
    if t.is_empty() {
        return Ok(f64::NAN);
    }
    t.parse::<f64>().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        row: Some(row),
        col: Some(col),
        msg: format!("non-numeric cell {raw:?}"),
    })
}

/// Load an omics CSV. First row holds names, first column holds IDs; the flag
/// says which axis is subjects. Output is always subjects-as-rows.
pub fn load_omics_csv(
    path: impl AsRef<Path>,
    modality: &str,
    orientation: Orientation,
) -> Result<OmicsMatrix> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)?;

    let mut rows: Vec<Vec<String>> = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        rows.push(rec.iter().map(|s| s.to_string()).collect());
    }
    if rows.len() < 2 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            row: None,
            col: None,
            msg: "need a header row and at least one data row".into(),
        });
    }
    let width = rows[0].len();
    for (i, r) in rows.iter().enumerate() {
        if r.len() != width {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row: Some(i + 1),
                col: None,
                msg: format!("ragged row: {} cells, expected {width}", r.len()),
            });
        }
    }

    let col_names: Vec<String> = rows[0][1..].to_vec();
    let row_names: Vec<String> = rows[1..].iter().map(|r| r[0].clone()).collect();
    let mut body = Vec::with_capacity(row_names.len() * col_names.len());
    for (i, r) in rows[1..].iter().enumerate() {
        for (j, cell) in r[1..].iter().enumerate() {
            body.push(parse_cell(cell, path, i + 2, j + 2)?);
        }
    }

    let (subject_ids, feature_names, values) = match orientation {
        Orientation::SubjectsAsRows => (row_names, col_names, body),
        Orientation::FeaturesAsRows => {
            // transpose: file rows are features, columns are subjects
            let nf = row_names.len();
            let ns = col_names.len();
            let mut t = vec![0.0; body.len()];
            for f in 0..nf {
                for s in 0..ns {
                    t[s * nf + f] = body[f * ns + s];
                }
            }
            (col_names, row_names, t)
        }
    };
    OmicsMatrix::new(subject_ids, feature_names, modality, values)
}

/// Shortest round-trip decimal for an f64; empty string for missing.
pub fn format_value(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

pub fn write_omics_csv(matrix: &OmicsMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    let mut header = vec!["subject".to_string()];
    header.extend(matrix.feature_names.iter().cloned());
    w.write_record(&header)?;
    for s in 0..matrix.n_subjects() {
        let mut rec = vec![matrix.subject_ids[s].clone()];
        rec.extend(matrix.row(s).iter().map(|&v| format_value(v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_phenotype_csv(path: impl AsRef<Path>, categorical: bool) -> Result<PhenotypeVector> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let mut subject_ids = Vec::new();
    let mut raw = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.len() < 2 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row: Some(i + 2),
                col: None,
                msg: "expected subject,value".into(),
            });
        }
        subject_ids.push(rec[0].to_string());
        raw.push(rec[1].to_string());
    }
    if subject_ids.is_empty() {
        return Err(Error::invalid("empty phenotype file"));
    }
    let values = if categorical {
        let mut class_names: Vec<String> = raw
            .iter()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        class_names.sort();
        let labels = raw
            .iter()
            .map(|v| class_names.iter().position(|c| c == v).unwrap())
            .collect();
        PhenotypeValues::Categorical {
            class_names,
            labels,
        }
    } else {
        let mut vals = Vec::with_capacity(raw.len());
        for (i, v) in raw.iter().enumerate() {
            vals.push(parse_cell(v, path, i + 2, 2).and_then(|x| {
                if x.is_nan() {
                    Err(Error::Parse {
                        path: path.to_path_buf(),
                        row: Some(i + 2),
                        col: Some(2),
                        msg: "missing phenotype value".into(),
                    })
                } else {
                    Ok(x)
                }
            })?);
        }
        PhenotypeValues::Continuous(vals)
    };
    Ok(PhenotypeVector {
        subject_ids,
        values,
    })
}

pub fn write_phenotype_csv(p: &PhenotypeVector, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record(["subject", "phenotype"])?;
    match &p.values {
        PhenotypeValues::Categorical {
            class_names,
            labels,
        } => {
            for (s, &l) in p.subject_ids.iter().zip(labels) {
                w.write_record([s.as_str(), class_names[l].as_str()])?;
            }
        }
        PhenotypeValues::Continuous(vals) => {
            for (s, &v) in p.subject_ids.iter().zip(vals) {
                w.write_record([s.as_str(), &format_value(v)])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Strip a TCGA-style suffix: keep the first `keep` delimiter-separated parts.
pub fn normalize_id(id: &str, delimiter: char, keep: usize) -> String {
    id.split(delimiter)
        .take(keep)
        .collect::<Vec<_>>()
        .join(&delimiter.to_string())
}

/// Average duplicate subject rows (aliquots); missing cells are ignored in the
/// mean and a cell stays missing only when every aliquot misses it.
fn aggregate_aliquots(
    m: &OmicsMatrix,
    policy: AliquotPolicy,
    aggregated: &mut BTreeSet<String>,
) -> Result<OmicsMatrix> {
    let nf = m.n_features();
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, id) in m.subject_ids.iter().enumerate() {
        groups
            .entry(id.as_str())
            .or_insert_with(|| {
                order.push(id.clone());
                Vec::new()
            })
            .push(i);
    }
    if groups.values().all(|g| g.len() == 1) {
        return Ok(m.clone());
    }
    if policy == AliquotPolicy::Error {
        let dup = groups.iter().find(|(_, g)| g.len() > 1).unwrap().0;
        return Err(Error::invalid(format!(
            "duplicate rows for subject {dup:?} in modality {:?} (aliquot policy is error)",
            m.modality
        )));
    }
    let mut values = Vec::with_capacity(order.len() * nf);
    for id in &order {
        let rows = &groups[id.as_str()];
        if rows.len() > 1 {
            aggregated.insert(id.clone());
        }
        for f in 0..nf {
            let mut sum = 0.0;
            let mut n = 0usize;
            for &r in rows {
                let v = m.get(r, f);
                if !v.is_nan() {
                    sum += v;
                    n += 1;
                }
            }
            values.push(if n == 0 { f64::NAN } else { sum / n as f64 });
        }
    }
    OmicsMatrix::new(order, m.feature_names.clone(), m.modality.clone(), values)
}

/// Align modalities and phenotype onto one cohort: aggregate aliquots,
/// intersect subject sets (sorted lexicographically), drop subjects with any
/// remaining missing value, and record everything in the provenance.
pub fn align_cohort(
    matrices: &[OmicsMatrix],
    phenotype: &PhenotypeVector,
    policy: AliquotPolicy,
) -> Result<AlignedDataset> {
    if matrices.is_empty() {
        return Err(Error::invalid("align_cohort needs at least one matrix"));
    }
    if phenotype.is_empty() {
        return Err(Error::invalid("empty phenotype"));
    }
    {
        let mut seen = BTreeSet::new();
        for id in &phenotype.subject_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::invalid(format!(
                    "duplicate phenotype subject {id:?}"
                )));
            }
        }
    }

    let mut aggregated = BTreeSet::new();
    let deduped: Vec<OmicsMatrix> = matrices
        .iter()
        .map(|m| aggregate_aliquots(m, policy, &mut aggregated))
        .collect::<Result<_>>()?;

    // intersection across all modalities and the phenotype
    let mut shared: BTreeSet<&str> = phenotype.subject_ids.iter().map(|s| s.as_str()).collect();
    let mut union: BTreeSet<&str> = shared.clone();
    for m in &deduped {
        let ids: BTreeSet<&str> = m.subject_ids.iter().map(|s| s.as_str()).collect();
        union.extend(ids.iter());
        shared = shared.intersection(&ids).copied().collect();
    }
    let dropped_not_shared: Vec<String> =
        union.difference(&shared).map(|s| s.to_string()).collect();

    // drop incomplete cases: any missing value in any modality
    let mut incomplete: BTreeSet<&str> = BTreeSet::new();
    for m in &deduped {
        for (i, id) in m.subject_ids.iter().enumerate() {
            if shared.contains(id.as_str()) && m.row(i).iter().any(|v| v.is_nan()) {
                incomplete.insert(id.as_str());
            }
        }
    }
    let cohort: Vec<String> = shared
        .iter()
        .filter(|id| !incomplete.contains(*id))
        .map(|s| s.to_string())
        .collect(); // BTreeSet iterates sorted
    if cohort.is_empty() {
        return Err(Error::invalid("empty cohort after alignment"));
    }
    let dropped_incomplete: Vec<String> = incomplete.iter().map(|s| s.to_string()).collect();

    let reindexed: Vec<OmicsMatrix> = deduped
        .iter()
        .map(|m| {
            let pos: BTreeMap<&str, usize> = m
                .subject_ids
                .iter()
                .enumerate()
                .map(|(i, s)| (s.as_str(), i))
                .collect();
            let mut values = Vec::with_capacity(cohort.len() * m.n_features());
            for id in &cohort {
                values.extend_from_slice(m.row(pos[id.as_str()]));
            }
            OmicsMatrix::new(
                cohort.clone(),
                m.feature_names.clone(),
                m.modality.clone(),
                values,
            )
        })
        .collect::<Result<_>>()?;

    let ppos: BTreeMap<&str, usize> = phenotype
        .subject_ids
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let order: Vec<usize> = cohort.iter().map(|id| ppos[id.as_str()]).collect();
    let phenotype = phenotype.reindex(&order);

    Ok(AlignedDataset {
        modalities: reindexed,
        phenotype,
        provenance: Provenance {
            aggregated_subjects: aggregated.into_iter().collect(),
            dropped_not_shared,
            dropped_incomplete,
        },
    })
}

/// Concatenate modality columns into one matrix, prefixing feature names with
/// the modality tag ("mrna:G1").
pub fn concat_modalities(dataset: &AlignedDataset, include: &[String]) -> Result<OmicsMatrix> {
    let mut selected = Vec::new();
    for tag in include {
        selected.push(
            dataset
                .modality(tag)
                .ok_or_else(|| Error::invalid(format!("unknown modality {tag:?}")))?,
        );
    }
    if selected.is_empty() {
        return Err(Error::invalid("no modalities requested"));
    }
    let ns = dataset.subject_ids().len();
    let mut feature_names = Vec::new();
    for m in &selected {
        for f in &m.feature_names {
            feature_names.push(format!("{}:{}", m.modality, f));
        }
    }
    {
        let mut seen = BTreeSet::new();
        for f in &feature_names {
            if !seen.insert(f.as_str()) {
                return Err(Error::invalid(format!(
                    "feature name collision after prefixing: {f:?}"
                )));
            }
        }
    }
    let total: usize = selected.iter().map(|m| m.n_features()).sum();
    let mut values = Vec::with_capacity(ns * total);
    for s in 0..ns {
        for m in &selected {
            values.extend_from_slice(m.row(s));
        }
    }
    OmicsMatrix::new(
        dataset.subject_ids().to_vec(),
        feature_names,
        include.join("+"),
        values,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(ids: &[&str], feats: &[&str], vals: &[f64]) -> OmicsMatrix {
        OmicsMatrix::new(
            ids.iter().map(|s| s.to_string()).collect(),
            feats.iter().map(|s| s.to_string()).collect(),
            "test",
            vals.to_vec(),
        )
        .unwrap()
    }

    fn pheno(ids: &[&str], vals: &[f64]) -> PhenotypeVector {
        PhenotypeVector {
            subject_ids: ids.iter().map(|s| s.to_string()).collect(),
            values: PhenotypeValues::Continuous(vals.to_vec()),
        }
    }

    #[test]
    fn transposed_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        // 3 feature rows x 2 subject columns
        std::fs::write(&p, "feat,S1,S2\nF1,1,4\nF2,2,5\nF3,3,6\n").unwrap();
        let m = load_omics_csv(&p, "m", Orientation::FeaturesAsRows).unwrap();
        assert_eq!(m.subject_ids, vec!["S1", "S2"]);
        assert_eq!(m.feature_names, vec!["F1", "F2", "F3"]);
        assert_eq!(m.row(0), &[1.0, 2.0, 3.0]);
        assert_eq!(m.row(1), &[4.0, 5.0, 6.0]);

        let q = dir.path().join("rt.csv");
        write_omics_csv(&m, &q).unwrap();
        let m2 = load_omics_csv(&q, "m", Orientation::SubjectsAsRows).unwrap();
        assert_eq!(m, m2);
    }

    #[test]
    fn blank_cell_is_missing_not_zero() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        std::fs::write(&p, "subject,F1,F2\nS1,1.5,\nS2,2.0,3.0\n").unwrap();
        let m = load_omics_csv(&p, "m", Orientation::SubjectsAsRows).unwrap();
        assert!(m.get(0, 1).is_nan());
        assert_eq!(m.get(0, 0), 1.5);
    }

    #[test]
    fn non_numeric_cell_reports_coordinates() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        std::fs::write(&p, "subject,F1\nS1,abc\n").unwrap();
        let e = load_omics_csv(&p, "m", Orientation::SubjectsAsRows).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("row 2") && msg.contains("column 2"), "{msg}");
    }

    #[test]
    fn ragged_row_is_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        std::fs::write(&p, "subject,F1,F2\nS1,1\n").unwrap();
        assert!(load_omics_csv(&p, "m", Orientation::SubjectsAsRows).is_err());
    }

    #[test]
    fn aliquots_average() {
        let m = mat(&["S", "S"], &["F1", "F2"], &[1.0, 5.0, 3.0, 7.0]);
        let y = pheno(&["S"], &[0.0]);
        let d = align_cohort(&[m], &y, AliquotPolicy::Average).unwrap();
        assert_eq!(d.modalities[0].row(0), &[2.0, 6.0]);
        assert_eq!(d.provenance.aggregated_subjects, vec!["S"]);
    }

    #[test]
    fn aliquot_policy_error_names_subject() {
        let m = mat(&["S", "S"], &["F1"], &[1.0, 2.0]);
        let y = pheno(&["S"], &[0.0]);
        let e = align_cohort(&[m], &y, AliquotPolicy::Error).unwrap_err();
        assert!(e.to_string().contains("\"S\""));
    }

    #[test]
    fn intersection_sorted() {
        let a = mat(&["A", "B", "C"], &["F1"], &[1.0, 2.0, 3.0]);
        let b = mat(&["D", "C", "B"], &["G1"], &[4.0, 5.0, 6.0]);
        let y = pheno(&["A", "B", "C", "D"], &[0.0, 1.0, 2.0, 3.0]);
        let d = align_cohort(&[a, b], &y, AliquotPolicy::Average).unwrap();
        assert_eq!(d.subject_ids(), &["B", "C"]);
        assert_eq!(d.modalities[1].row(0), &[6.0]);
        assert!(d.provenance.dropped_not_shared.contains(&"A".to_string()));
        assert!(d.provenance.dropped_not_shared.contains(&"D".to_string()));
    }

    #[test]
    fn incomplete_subjects_dropped() {
        let a = mat(&["A", "B"], &["F1"], &[f64::NAN, 2.0]);
        let y = pheno(&["A", "B"], &[0.0, 1.0]);
        let d = align_cohort(&[a], &y, AliquotPolicy::Average).unwrap();
        assert_eq!(d.subject_ids(), &["B"]);
        assert_eq!(d.provenance.dropped_incomplete, vec!["A"]);
        assert!(!d.modalities[0].has_missing());
    }

    #[test]
    fn alignment_idempotent() {
        let a = mat(&["C", "A", "A", "B"], &["F1"], &[3.0, 1.0, 2.0, 4.0]);
        let y = pheno(&["A", "B", "C"], &[0.0, 1.0, 2.0]);
        let d1 = align_cohort(&[a], &y, AliquotPolicy::Average).unwrap();
        let d2 = align_cohort(&d1.modalities, &d1.phenotype, AliquotPolicy::Average).unwrap();
        assert_eq!(d1.modalities, d2.modalities);
        assert_eq!(d1.phenotype, d2.phenotype);
    }

    #[test]
    fn aliquot_averaging_order_invariant() {
        let a = mat(&["S", "T", "S"], &["F1"], &[1.0, 9.0, 3.0]);
        let b = mat(&["S", "S", "T"], &["F1"], &[3.0, 1.0, 9.0]);
        let y = pheno(&["S", "T"], &[0.0, 1.0]);
        let da = align_cohort(&[a], &y, AliquotPolicy::Average).unwrap();
        let db = align_cohort(&[b], &y, AliquotPolicy::Average).unwrap();
        assert_eq!(da.modalities, db.modalities);
    }

    #[test]
    fn empty_intersection_errors() {
        let a = mat(&["A"], &["F1"], &[1.0]);
        let y = pheno(&["B"], &[0.0]);
        assert!(align_cohort(&[a], &y, AliquotPolicy::Average).is_err());
    }

    #[test]
    fn concat_prefixes_names() {
        let mut a = mat(&["A", "B"], &["G1", "G2"], &[1.0, 2.0, 3.0, 4.0]);
        a.modality = "mrna".into();
        let mut b = mat(
            &["A", "B"],
            &["M1", "M2", "M3"],
            &[5.0, 6.0, 7.0, 8.0, 9.0, 10.0],
        );
        b.modality = "mirna".into();
        let y = pheno(&["A", "B"], &[0.0, 1.0]);
        let d = align_cohort(&[a, b], &y, AliquotPolicy::Average).unwrap();
        let c = concat_modalities(&d, &["mrna".into(), "mirna".into()]).unwrap();
        assert_eq!(c.n_features(), 5);
        assert_eq!(c.feature_names[0], "mrna:G1");
        assert_eq!(c.feature_names[4], "mirna:M3");
        assert_eq!(c.row(0), &[1.0, 2.0, 5.0, 6.0, 7.0]);
    }

    #[test]
    fn concat_single_modality_is_identity_on_values() {
        let a = mat(&["A"], &["G1", "G2"], &[1.0, 2.0]);
        let y = pheno(&["A"], &[0.0]);
        let d = align_cohort(std::slice::from_ref(&a), &y, AliquotPolicy::Average).unwrap();
        let c = concat_modalities(&d, &["test".into()]).unwrap();
        assert_eq!(c.values, a.values);
    }

    #[test]
    fn concat_width_over_all_subsets() {
        let mut ms = Vec::new();
        for (tag, nf) in [("x", 2usize), ("y", 3), ("z", 4)] {
            let names: Vec<String> = (0..nf).map(|i| format!("f{i}")).collect();
            let m = OmicsMatrix::new(vec!["A".into()], names, tag, vec![1.0; nf]).unwrap();
            ms.push(m);
        }
        let y = pheno(&["A"], &[0.0]);
        let d = align_cohort(&ms, &y, AliquotPolicy::Average).unwrap();
        let tags = ["x", "y", "z"];
        let sizes = [2usize, 3, 4];
        for mask in 1u32..8 {
            let include: Vec<String> = (0..3)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| tags[i].to_string())
                .collect();
            let want: usize = (0..3)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| sizes[i])
                .sum();
            let c = concat_modalities(&d, &include).unwrap();
            assert_eq!(c.n_features(), want);
        }
    }

    #[test]
    fn normalize_id_strips_suffix() {
        assert_eq!(normalize_id("TCGA-AB-1234-01A-11", '-', 3), "TCGA-AB-1234");
        assert_eq!(normalize_id("plain", '-', 3), "plain");
    }
}
