//! Species records, class sets, and the dataset curation rule.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::io;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error("unknown class id {0}")]
    UnknownClass(usize),
    #[error("duplicate scientific name '{0}'")]
    DuplicateName(String),
    #[error("taxon '{0}' has an empty {1}")]
    MissingLineage(String, &'static str),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
}

/// One species with the lineage used for error attribution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonRecord {
    pub class_id: usize,
    pub scientific_name: String,
    pub common_name: String,
    pub genus: String,
    pub family: String,
    /// Training images available for this species.
    pub image_count: u64,
}

/// An ordered, densely indexed list of taxa.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSet {
    pub name: String,
    pub taxa: Vec<TaxonRecord>,
}

impl ClassSet {
    /// Build a class set, re-densifying `class_id` to `0..C-1` in the
    /// given order and validating lineage and name uniqueness.
    pub fn new(
        name: impl Into<String>,
        taxa: impl IntoIterator<Item = TaxonRecord>,
    ) -> Result<Self, TaxonomyError> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for (i, mut t) in taxa.into_iter().enumerate() {
            if t.genus.trim().is_empty() {
                return Err(TaxonomyError::MissingLineage(t.scientific_name, "genus"));
            }
            if t.family.trim().is_empty() {
                return Err(TaxonomyError::MissingLineage(t.scientific_name, "family"));
            }
            if !seen.insert(t.scientific_name.clone()) {
                return Err(TaxonomyError::DuplicateName(t.scientific_name));
            }
            t.class_id = i;
            out.push(t);
        }
        Ok(ClassSet {
            name: name.into(),
            taxa: out,
        })
    }

    pub fn len(&self) -> usize {
        self.taxa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taxa.is_empty()
    }

    /// Record for `class_id`, used by attribution and serving.
    pub fn lookup(&self, class_id: usize) -> Result<&TaxonRecord, TaxonomyError> {
        self.taxa
            .get(class_id)
            .ok_or(TaxonomyError::UnknownClass(class_id))
    }

    pub fn find_by_name(&self, scientific_name: &str) -> Option<&TaxonRecord> {
        self.taxa
            .iter()
            .find(|t| t.scientific_name == scientific_name)
    }

    /// Serialize as UTF-8 CSV with the canonical header.
    pub fn to_csv(&self) -> Result<String, TaxonomyError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "class_id",
            "scientific_name",
            "common_name",
            "genus",
            "family",
            "image_count",
        ])?;
        for t in &self.taxa {
            w.write_record([
                t.class_id.to_string(),
                t.scientific_name.clone(),
                t.common_name.clone(),
                t.genus.clone(),
                t.family.clone(),
                t.image_count.to_string(),
            ])?;
        }
        let bytes = w.into_inner().expect("csv writer into_inner");
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Parse the CSV form; the set name is supplied by the caller since
    /// the file format carries only rows.
    pub fn from_csv(name: impl Into<String>, text: &str) -> Result<Self, TaxonomyError> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let mut taxa = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            taxa.push(TaxonRecord {
                class_id: rec[0].parse().unwrap_or(0),
                scientific_name: rec[1].to_string(),
                common_name: rec[2].to_string(),
                genus: rec[3].to_string(),
                family: rec[4].to_string(),
                image_count: rec[5].parse().unwrap_or(0),
            });
        }
        ClassSet::new(name, taxa)
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), TaxonomyError> {
        crate::util::write_atomic(path, self.to_csv()?.as_bytes())?;
        Ok(())
    }

    pub fn read_csv(name: impl Into<String>, path: &Path) -> Result<Self, TaxonomyError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_csv(name, &text)
    }
}

/// Keep exactly the taxa with `image_count >= min_images`, preserving
/// order and re-densifying indices.
///
/// "Fewer than `min_images`" is excluded, so a count exactly at the
/// threshold survives.
pub fn filter_species(
    candidates: &[TaxonRecord],
    min_images: u64,
    name: impl Into<String>,
) -> ClassSet {
    let kept = candidates
        .iter()
        .filter(|t| t.image_count >= min_images)
        .cloned();
    ClassSet::new(name, kept).expect("filtering preserves validity of input records")
}

#[cfg(test)]
pub(crate) fn taxon(name: &str, genus: &str, family: &str, count: u64) -> TaxonRecord {
    TaxonRecord {
        class_id: 0,
        scientific_name: name.to_string(),
        common_name: name.to_lowercase(),
        genus: genus.to_string(),
        family: family.to_string(),
        image_count: count,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<TaxonRecord> {
        vec![
            taxon("Avena sterilis", "Avena", "Poaceae", 99),
            taxon("Caragana halodendron", "Caragana", "Fabaceae", 182),
            taxon("Avena fatua", "Avena", "Poaceae", 100),
        ]
    }

    #[test]
    fn threshold_is_exclusive_below() {
        // counts [99, 182, 100] with min 100: boundary 100 is kept.
        let set = filter_species(&sample(), 100, "kept");
        let counts: Vec<u64> = set.taxa.iter().map(|t| t.image_count).collect();
        assert_eq!(counts, vec![182, 100]);
    }

    #[test]
    fn minimum_surviving_species_passes_global_filter() {
        let set = filter_species(&sample(), 100, "global");
        assert!(set.find_by_name("Caragana halodendron").is_some());
    }

    #[test]
    fn empty_input_gives_empty_set() {
        let set = filter_species(&[], 100, "empty");
        assert!(set.is_empty());
    }

    #[test]
    fn filtering_is_idempotent_and_redensifies() {
        let once = filter_species(&sample(), 100, "x");
        let twice = filter_species(&once.taxa, 100, "x");
        assert_eq!(once, twice);
        let ids: Vec<usize> = once.taxa.iter().map(|t| t.class_id).collect();
        assert_eq!(ids, vec![0, 1]);
    }

    #[test]
    fn lookup_in_and_out_of_range() {
        let set = ClassSet::new("one", vec![taxon("Zea mays", "Zea", "Poaceae", 5)]).unwrap();
        assert_eq!(set.lookup(0).unwrap().scientific_name, "Zea mays");
        assert!(matches!(
            set.lookup(1),
            Err(TaxonomyError::UnknownClass(1))
        ));
    }

    #[test]
    fn congeners_share_genus() {
        let set = ClassSet::new("avena", sample()).unwrap();
        let a = set.find_by_name("Avena sterilis").unwrap();
        let b = set.find_by_name("Avena fatua").unwrap();
        assert_eq!(a.genus, b.genus);
    }

    #[test]
    fn duplicate_names_rejected() {
        let err = ClassSet::new(
            "dup",
            vec![
                taxon("Zea mays", "Zea", "Poaceae", 5),
                taxon("Zea mays", "Zea", "Poaceae", 9),
            ],
        );
        assert!(matches!(err, Err(TaxonomyError::DuplicateName(_))));
    }

    #[test]
    fn csv_round_trip() {
        let set = ClassSet::new("rt", sample()).unwrap();
        let text = set.to_csv().unwrap();
        assert!(text.starts_with(
            "class_id,scientific_name,common_name,genus,family,image_count"
        ));
        let back = ClassSet::from_csv("rt", &text).unwrap();
        assert_eq!(set, back);
    }
}
