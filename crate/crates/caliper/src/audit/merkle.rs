//! Field-level commitment tree over an assurance card.
//!
//! A card holder sometimes needs to show one consumer a few fields — say the
//! verdict and expiry — without revealing evidence masses or replay handles
//! to that consumer. The commitment here makes that possible: each of the
//! card's fields becomes a leaf, the leaves Merkle-hash up to a single root,
//! and any subset of fields can be disclosed with per-field authentication
//! paths against that root. A verifier holding only the root can check the
//! disclosed values without learning anything about the hidden ones beyond
//! their hashes.
//!
//! Construction: fields are taken in sorted-name order from the canonical
//! card encoding; each leaf is `sha256(field_name ‖ 0x00 ‖ canonical value
//! bytes)`; the leaf list is padded to the next power of two by repeating
//! the last leaf; internal nodes are `sha256(left ‖ right)`.

use serde_json::Value;

use super::bundle::card_to_canon;
use super::canon::canonical_bytes;
use super::digest::sha256;
use crate::card::AssuranceCard;

/// Number of fields in a card, and so the number of real leaves.
pub const CARD_FIELD_COUNT: usize = 30;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MerkleError {
    #[error("unknown card field {0:?}")]
    UnknownField(String),
}

fn leaf_hash(name: &str, value: &Value) -> [u8; 32] {
    let mut data = Vec::with_capacity(name.len() + 1 + 64);
    data.extend_from_slice(name.as_bytes());
    data.push(0x00);
    data.extend_from_slice(&canonical_bytes(value));
    sha256(&data)
}

fn parent_hash(left: &[u8; 32], right: &[u8; 32]) -> [u8; 32] {
    let mut data = [0u8; 64];
    data[..32].copy_from_slice(left);
    data[32..].copy_from_slice(right);
    sha256(&data)
}

/// One step of an authentication path: the sibling hash and which side it
/// sits on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathNode {
    pub sibling: [u8; 32],
    pub sibling_on_left: bool,
}

/// A disclosed field with its value and path to the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldProof {
    pub field: String,
    pub value: Value,
    pub path: Vec<PathNode>,
}

/// A root plus proofs for the disclosed subset of fields.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectiveDisclosure {
    pub root: [u8; 32],
    pub proofs: Vec<FieldProof>,
}

/// The full commitment: root, per-field values, and the interior levels
/// needed to extract paths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CardCommitment {
    root: [u8; 32],
    fields: Vec<(String, Value)>,
    /// `levels[0]` is the padded leaf row; the last level is `[root]`.
    levels: Vec<Vec<[u8; 32]>>,
}

pub fn commit_card(card: &AssuranceCard) -> CardCommitment {
    let canon = card_to_canon(card);
    let map = canon.as_object().expect("card encodes to an object");
    let fields: Vec<(String, Value)> = map.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    debug_assert_eq!(fields.len(), CARD_FIELD_COUNT);

    let mut row: Vec<[u8; 32]> = fields.iter().map(|(k, v)| leaf_hash(k, v)).collect();
    let width = row.len().next_power_of_two().max(1);
    while row.len() < width {
        row.push(*row.last().expect("at least one leaf"));
    }

    let mut levels = vec![row];
    while levels.last().unwrap().len() > 1 {
        let prev = levels.last().unwrap();
        let next: Vec<[u8; 32]> =
            prev.chunks(2).map(|pair| parent_hash(&pair[0], &pair[1])).collect();
        levels.push(next);
    }
    let root = levels.last().unwrap()[0];
    CardCommitment { root, fields, levels }
}

impl CardCommitment {
    pub fn root(&self) -> [u8; 32] {
        self.root
    }

    pub fn field_names(&self) -> Vec<&str> {
        self.fields.iter().map(|(k, _)| k.as_str()).collect()
    }

    fn path_for(&self, mut index: usize) -> Vec<PathNode> {
        let mut path = Vec::with_capacity(self.levels.len() - 1);
        for level in &self.levels[..self.levels.len() - 1] {
            let sibling_index = index ^ 1;
            path.push(PathNode { sibling: level[sibling_index], sibling_on_left: index % 2 == 1 });
            index /= 2;
        }
        path
    }

    /// Discloses exactly the named fields (deduplicated, in sorted field
    /// order). Unknown names are errors. An empty list yields a bare root.
    pub fn prove(&self, disclose: &[&str]) -> Result<SelectiveDisclosure, MerkleError> {
        for name in disclose {
            if !self.fields.iter().any(|(k, _)| k == name) {
                return Err(MerkleError::UnknownField(name.to_string()));
            }
        }
        let proofs = self
            .fields
            .iter()
            .enumerate()
            .filter(|(_, (k, _))| disclose.contains(&k.as_str()))
            .map(|(i, (k, v))| FieldProof {
                field: k.clone(),
                value: v.clone(),
                path: self.path_for(i),
            })
            .collect();
        Ok(SelectiveDisclosure { root: self.root, proofs })
    }
}

/// Checks one field proof against a root.
pub fn verify_field_proof(root: &[u8; 32], proof: &FieldProof) -> bool {
    let mut h = leaf_hash(&proof.field, &proof.value);
    for node in &proof.path {
        h = if node.sibling_on_left {
            parent_hash(&node.sibling, &h)
        } else {
            parent_hash(&h, &node.sibling)
        };
    }
    h == *root
}

/// Checks every proof in a disclosure against its root.
pub fn verify_disclosure(disclosure: &SelectiveDisclosure) -> bool {
    disclosure.proofs.iter().all(|p| verify_field_proof(&disclosure.root, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit::bundle::{card_from_canon, card_to_canon};
    use crate::card::{AssuranceCard, Verdict, VERIFIER_VERSION};
    use crate::numeric::Rational;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample_card() -> AssuranceCard {
        AssuranceCard {
            verdict: Verdict::Residue { weight: Rational::new(23, 25) },
            perturbation_budget: Rational::new(3, 50),
            variant_flips: 0,
            semantic_agreement: Rational::one(),
            supported_mass: Rational::new(23, 25),
            contradicted_mass: Rational::new(2, 25),
            contested_mass: Rational::zero(),
            unknown_mass: Rational::zero(),
            conformal_set_size: 0,
            calibration_gap: Rational::new(3, 100),
            is_deterministic: false,
            sample_count: 5,
            proof_of_sampling: None,
            in_scope: true,
            scope_predicates_held: vec!["records_current".into()],
            source_snapshot_hash: [0xfa; 32],
            issue_time: 1_714_000_000,
            expiry_time: 1_714_086_400,
            forbidden_check_pass: true,
            action_precondition: false,
            budget_under_limit: true,
            residue_coverage: Rational::new(23, 25),
            dropped_claims: vec!["claim_04 refuted by the product label".into()],
            unverified_layers: vec![],
            model_version_hash: [0x3d; 32],
            prompt_template_hash: [0x9a; 32],
            human_signatures: vec![],
            certificate_digest: [0xb7; 32],
            verifier_version: VERIFIER_VERSION.into(),
            replay_handle: "clinical-2024-04-24-a1".into(),
        }
    }

    #[test]
    fn commitment_covers_exactly_the_card_fields() {
        let commitment = commit_card(&sample_card());
        let names = commitment.field_names();
        assert_eq!(names.len(), CARD_FIELD_COUNT);
        let mut sorted = names.clone();
        sorted.sort_unstable();
        assert_eq!(names, sorted, "fields are committed in sorted order");
        assert!(names.contains(&"verdict"));
        assert!(names.contains(&"replay_handle"));
    }

    #[test]
    fn root_is_stable_across_wire_round_trip() {
        let card = sample_card();
        let c1 = commit_card(&card);
        let decoded = card_from_canon(&card_to_canon(&card)).unwrap();
        let c2 = commit_card(&decoded);
        assert_eq!(c1.root(), c2.root());
    }

    #[test]
    fn every_singleton_and_pair_discloses_and_verifies() {
        let commitment = commit_card(&sample_card());
        let names = commitment.field_names();
        for (i, &a) in names.iter().enumerate() {
            let single = commitment.prove(&[a]).unwrap();
            assert_eq!(single.proofs.len(), 1);
            assert!(verify_disclosure(&single), "singleton {a}");
            for &b in &names[i + 1..] {
                let pair = commitment.prove(&[a, b]).unwrap();
                assert_eq!(pair.proofs.len(), 2);
                assert!(verify_disclosure(&pair), "pair {a},{b}");
            }
        }
    }

    #[test]
    fn empty_and_full_disclosures_verify() {
        let commitment = commit_card(&sample_card());
        let empty = commitment.prove(&[]).unwrap();
        assert!(empty.proofs.is_empty());
        assert!(verify_disclosure(&empty));

        let names = commitment.field_names();
        let full = commitment.prove(&names).unwrap();
        assert_eq!(full.proofs.len(), CARD_FIELD_COUNT);
        assert!(verify_disclosure(&full));
    }

    #[test]
    fn random_subsets_verify() {
        let commitment = commit_card(&sample_card());
        let names = commitment.field_names();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..500 {
            let k = rng.gen_range(0..=names.len());
            let subset: Vec<&str> = names.choose_multiple(&mut rng, k).copied().collect();
            let disclosure = commitment.prove(&subset).unwrap();
            assert_eq!(disclosure.proofs.len(), k);
            assert!(verify_disclosure(&disclosure));
        }
    }

    #[test]
    fn paths_have_depth_five() {
        // 30 leaves pad to 32, a perfect depth-5 tree.
        let commitment = commit_card(&sample_card());
        let d = commitment.prove(&["verdict"]).unwrap();
        assert_eq!(d.proofs[0].path.len(), 5);
    }

    #[test]
    fn tampered_values_roots_and_names_fail() {
        let commitment = commit_card(&sample_card());
        let mut d = commitment.prove(&["sample_count"]).unwrap();
        assert!(verify_disclosure(&d));

        let honest = d.proofs[0].clone();

        d.proofs[0].value = serde_json::json!(6);
        assert!(!verify_disclosure(&d));

        d.proofs[0] = honest.clone();
        d.proofs[0].field = "variant_flips".into();
        assert!(!verify_disclosure(&d));

        d.proofs[0] = honest;
        d.root[0] ^= 1;
        assert!(!verify_disclosure(&d));
    }

    #[test]
    fn different_cards_commit_to_different_roots() {
        let card = sample_card();
        let mut other = card.clone();
        other.sample_count = 6;
        assert_ne!(commit_card(&card).root(), commit_card(&other).root());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let commitment = commit_card(&sample_card());
        assert_eq!(
            commitment.prove(&["favorite_color"]).unwrap_err(),
            MerkleError::UnknownField("favorite_color".into())
        );
    }
}
