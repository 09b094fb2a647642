use std::io::{Read, Write};
use std::path::Path;

use super::{
    Conclusion, ConclusionMapping, EliminationBasis, GroundTruth, Response, StudyDataset,
};
use crate::error::{Error, Result};

const REQUIRED: [&str; 4] = ["examiner", "item", "ground_truth", "conclusion"];

struct Columns {
    examiner: usize,
    item: usize,
    ground_truth: usize,
    conclusion: usize,
    subtype: Option<usize>,
    basis: Option<usize>,
    sequence: Option<usize>,
}

impl Columns {
    fn locate(headers: &csv::StringRecord) -> Result<Self> {
        let find = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim().eq_ignore_ascii_case(name))
        };
        let required = |name: &str| find(name).ok_or_else(|| Error::MissingColumn(name.into()));
        Ok(Columns {
            examiner: required(REQUIRED[0])?,
            item: required(REQUIRED[1])?,
            ground_truth: required(REQUIRED[2])?,
            conclusion: required(REQUIRED[3])?,
            subtype: find("subtype"),
            basis: find("basis"),
            sequence: find("sequence"),
        })
    }
}

pub fn ingest_csv(path: impl AsRef<Path>, mapping: &ConclusionMapping) -> Result<StudyDataset> {
    let file = std::fs::File::open(path)?;
    ingest_reader(file, mapping)
}

/// Parses `examiner,item,ground_truth,conclusion[,subtype][,basis][,sequence]`.
///
/// Row order is preserved; a missing or blank `sequence` defaults to the
/// zero-based row index.
pub fn ingest_reader<R: Read>(reader: R, mapping: &ConclusionMapping) -> Result<StudyDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(Error::EmptyDataset);
    }
    let cols = Columns::locate(&headers)?;
    let mut responses = Vec::new();
    let mut notes = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let get = |i: usize| rec.get(i).unwrap_or("").trim();
        let opt = |i: Option<usize>| i.map(get).filter(|s| !s.is_empty());

        let examiner_id = get(cols.examiner).to_string();
        let item_id = get(cols.item).to_string();
        for (name, v) in [("examiner", &examiner_id), ("item", &item_id)] {
            if v.is_empty() {
                return Err(Error::InvalidField {
                    column: name.into(),
                    value: String::new(),
                    row,
                });
            }
        }
        let gt_raw = get(cols.ground_truth);
        let ground_truth: GroundTruth = gt_raw.parse().map_err(|_| Error::InvalidField {
            column: "ground_truth".into(),
            value: gt_raw.into(),
            row,
        })?;
        let raw_conclusion = get(cols.conclusion).to_string();
        let canonical = mapping.canonical(&raw_conclusion)?;

        let inconclusive_subtype = match opt(cols.subtype) {
            Some(label) => {
                let st = mapping
                    .subtype(label)
                    .ok_or_else(|| Error::UnmappedLabel(label.to_string()))?;
                if canonical == Conclusion::Inconclusive {
                    Some(st)
                } else {
                    notes.push(format!("row {row}: subtype `{label}` ignored on {} response", canonical.name()));
                    None
                }
            }
            None if canonical == Conclusion::Inconclusive => mapping.subtype(&raw_conclusion),
            None => None,
        };

        let elimination_basis = match opt(cols.basis) {
            Some(b) => {
                let basis: EliminationBasis = b.parse().map_err(|_| Error::InvalidField {
                    column: "basis".into(),
                    value: b.into(),
                    row,
                })?;
                if canonical == Conclusion::Exclusion {
                    Some(basis)
                } else {
                    notes.push(format!("row {row}: basis `{b}` ignored on {} response", canonical.name()));
                    None
                }
            }
            None => None,
        };

        let sequence = match opt(cols.sequence) {
            Some(s) => s.parse::<u64>().map_err(|_| Error::InvalidField {
                column: "sequence".into(),
                value: s.into(),
                row,
            })?,
            None => row as u64,
        };

        responses.push(Response {
            examiner_id,
            item_id,
            ground_truth,
            raw_conclusion,
            canonical,
            inconclusive_subtype,
            elimination_basis,
            sequence,
        });
    }
    let mut ds = StudyDataset::from_responses(responses)?;
    for n in notes {
        ds.note(n);
    }
    Ok(ds)
}

/// Writes responses in the ingestible CSV layout using their raw labels.
pub fn write_csv<W: Write>(dataset: &StudyDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["examiner", "item", "ground_truth", "conclusion", "basis", "sequence"])?;
    for r in dataset.responses() {
        let basis = match r.elimination_basis {
            Some(EliminationBasis::Class) => "class",
            Some(EliminationBasis::Individual) => "individual",
            None => "",
        };
        w.write_record([
            r.examiner_id.as_str(),
            r.item_id.as_str(),
            r.ground_truth.code(),
            r.raw_conclusion.as_str(),
            basis,
            &r.sequence.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::study_data::InconclusiveSubtype;

    fn monson() -> ConclusionMapping {
        ConclusionMapping::builtin("monson2022").unwrap()
    }

    #[test]
    fn empty_file_is_empty_dataset() {
        assert!(matches!(ingest_reader("".as_bytes(), &monson()), Err(Error::EmptyDataset)));
        let header_only = "examiner,item,ground_truth,conclusion\n";
        assert!(matches!(ingest_reader(header_only.as_bytes(), &monson()), Err(Error::EmptyDataset)));
    }

    #[test]
    fn four_row_example() {
        let text = "examiner,item,ground_truth,conclusion\n\
                    E1,I1,SS,Identification\n\
                    E1,I2,DS,Inc-A\n\
                    E2,I1,SS,Unsuitable\n\
                    E2,I2,DS,Elimination\n";
        let ds = ingest_reader(text.as_bytes(), &monson()).unwrap();
        assert_eq!(ds.examiners().len(), 2);
        assert_eq!(ds.items().len(), 2);
        assert_eq!(ds.len(), 4);
        let cats: Vec<_> = ds.responses().iter().map(|r| r.canonical).collect();
        assert_eq!(
            cats,
            vec![
                Conclusion::Identification,
                Conclusion::Inconclusive,
                Conclusion::Unsuitable,
                Conclusion::Exclusion
            ]
        );
        assert_eq!(ds.responses()[1].inconclusive_subtype, Some(InconclusiveSubtype::SupportSame));
        assert_eq!(ds.responses()[3].sequence, 3);
    }

    #[test]
    fn unmapped_label_is_named() {
        let text = "examiner,item,ground_truth,conclusion\nE1,I1,SS,Maybe\n";
        let err = ingest_reader(text.as_bytes(), &monson()).unwrap_err();
        assert!(matches!(err, Error::UnmappedLabel(l) if l == "Maybe"));
    }

    #[test]
    fn missing_column() {
        let text = "examiner,item,conclusion\nE1,I1,Identification\n";
        let err = ingest_reader(text.as_bytes(), &monson()).unwrap_err();
        assert!(matches!(err, Error::MissingColumn(c) if c == "ground_truth"));
    }

    #[test]
    fn optional_columns() {
        let text = "Examiner,Item,Ground_Truth,Conclusion,Subtype,Basis,Sequence\n\
                    E1,I1,DS,Elimination,,individual,4\n\
                    E1,I2,SS,Inconclusive,Inc-B,,\n\
                    E1,I3,SS,Identification,,class,9\n";
        let ds = ingest_reader(text.as_bytes(), &monson()).unwrap();
        let r = ds.responses();
        assert_eq!(r[0].elimination_basis, Some(EliminationBasis::Individual));
        assert_eq!(r[0].sequence, 4);
        assert_eq!(r[1].inconclusive_subtype, Some(InconclusiveSubtype::SupportNeither));
        assert_eq!(r[1].sequence, 1);
        assert_eq!(r[2].elimination_basis, None);
        assert_eq!(ds.validation_log().len(), 1);
    }

    #[test]
    fn bad_ground_truth() {
        let text = "examiner,item,ground_truth,conclusion\nE1,I1,XX,Identification\n";
        assert!(matches!(
            ingest_reader(text.as_bytes(), &monson()),
            Err(Error::InvalidField { column, .. }) if column == "ground_truth"
        ));
    }

    #[test]
    fn write_then_read_preserves_responses() {
        let text = "examiner,item,ground_truth,conclusion,basis,sequence\n\
                    E1,I1,DS,Elimination,class,0\n\
                    E2,I1,DS,Inc-C,,1\n";
        let ds = ingest_reader(text.as_bytes(), &monson()).unwrap();
        let mut buf = Vec::new();
        write_csv(&ds, &mut buf).unwrap();
        let back = ingest_reader(buf.as_slice(), &monson()).unwrap();
        assert_eq!(back.responses(), ds.responses());
    }
}
