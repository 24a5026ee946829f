//! Seeded synthetic data generators used by tests, benchmarks, and the
//! bundled demonstration workflow: planted-partition graphs for community
//! recovery and a planted-signal multi-omics cohort for end-to-end
//! prediction.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::ingest::{AlignedDataset, OmicsMatrix, PhenotypeValues, PhenotypeVector, Provenance};
use crate::netbuild::{Edge, FeatureGraph, GraphMeta};

/// Planted-partition graph: `blocks` communities of `block_size` nodes,
/// within-block edge probability `p_in`, between-block `p_out`, unit weights.
/// Returns the graph and the ground-truth labels.
pub fn planted_partition_graph(
    blocks: usize,
    block_size: usize,
    p_in: f64,
    p_out: f64,
    seed: u64,
) -> (FeatureGraph, Vec<usize>) {
    let n = blocks * block_size;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<usize> = (0..n).map(|i| i / block_size).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if labels[i] == labels[j] { p_in } else { p_out };
            if rng.gen_bool(p) {
                edges.push(Edge { i, j, weight: 1.0 });
            }
        }
    }
    let g = FeatureGraph::new(
        (0..n).map(|i| format!("n{i:03}")).collect(),
        edges,
        GraphMeta {
            method: "planted_partition".into(),
            params: vec![
                ("blocks".into(), blocks.to_string()),
                ("block_size".into(), block_size.to_string()),
                ("seed".into(), seed.to_string()),
            ],
        },
    )
    .expect("planted partition construction");
    (g, labels)
}

/// Parameters of the planted-signal cohort generator.
#[derive(Debug, Clone)]
pub struct CohortSpec {
    pub n_subjects: usize,
    /// (modality tag, number of features) per modality
    pub modalities: Vec<(String, usize)>,
    /// number of informative features, spread round-robin across modalities
    pub n_informative: usize,
    pub n_classes: usize,
    /// per-class subject counts; must sum to n_subjects
    pub class_counts: Vec<usize>,
    pub seed: u64,
}

impl Default for CohortSpec {
    fn default() -> Self {
        CohortSpec {
            n_subjects: 200,
            modalities: vec![
                ("mrna".into(), 25),
                ("methylation".into(), 25),
                ("mirna".into(), 10),
            ],
            n_informative: 10,
            n_classes: 3,
            class_counts: vec![80, 70, 50],
            seed: 0,
        }
    }
}

/// Synthetic aligned cohort with a planted class signal: informative features
/// get class-dependent mean shifts on unit-variance noise, the rest are pure
/// noise. Informative feature f uses offset pattern
/// `shift * sign(f, class)` so classes are linearly separable.
pub fn planted_cohort(spec: &CohortSpec) -> AlignedDataset {
    assert_eq!(
        spec.class_counts.iter().sum::<usize>(),
        spec.n_subjects,
        "class counts must sum to n_subjects"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let total_features: usize = spec.modalities.iter().map(|&(_, n)| n).sum();
    assert!(spec.n_informative <= total_features);

    // subject labels, then shuffled so classes interleave
    let mut labels: Vec<usize> = spec
        .class_counts
        .iter()
        .enumerate()
        .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
        .collect();
    labels.shuffle(&mut rng);

    // global feature indices carrying signal, round-robin over modalities
    let mut informative = Vec::new();
    {
        let mut offsets: Vec<usize> = Vec::new();
        let mut base = 0;
        for &(_, n) in &spec.modalities {
            offsets.push(base);
            base += n;
        }
        let mut cursor = vec![0usize; spec.modalities.len()];
        let mut m = 0;
        while informative.len() < spec.n_informative {
            if cursor[m] < spec.modalities[m].1 {
                informative.push(offsets[m] + cursor[m]);
                cursor[m] += 1;
            }
            m = (m + 1) % spec.modalities.len();
        }
    }

    // class-dependent mean for informative feature slot k: +/- 2.0 patterns
    let shift = 2.0;
    let mean = |slot: usize, class: usize| -> f64 {
        // distinct sign pattern per class from the bits of slot + class
        let phase = (slot + class * (slot + 1)) % 3;
        match phase {
            0 => shift,
            1 => -shift,
            _ => 0.0,
        }
    };

    let subject_ids: Vec<String> = (0..spec.n_subjects).map(|i| format!("S{i:04}")).collect();
    let mut modalities = Vec::new();
    let mut global_f = 0usize;
    for (tag, nf) in &spec.modalities {
        let mut values = Vec::with_capacity(spec.n_subjects * nf);
        let feature_names: Vec<String> = (0..*nf).map(|i| format!("{tag}_f{i:03}")).collect();
        for s in 0..spec.n_subjects {
            for f in 0..*nf {
                let gf = global_f + f;
                let noise: f64 = rng.sample(StandardNormal);
                let mu = informative
                    .iter()
                    .position(|&x| x == gf)
                    .map_or(0.0, |slot| mean(slot, labels[s]));
                values.push(mu + noise);
            }
        }
        modalities.push(
            OmicsMatrix::new(subject_ids.clone(), feature_names, tag.clone(), values).unwrap(),
        );
        global_f += nf;
    }

    let phenotype = PhenotypeVector {
        subject_ids,
        values: PhenotypeValues::Categorical {
            class_names: (0..spec.n_classes).map(|c| format!("class{c}")).collect(),
            labels,
        },
    };
    AlignedDataset {
        modalities,
        phenotype,
        provenance: Provenance::default(),
    }
}
