//! Gas accounting: the measured per-invocation cost table and the
//! micro-operation cost model.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Base cost charged for every transaction.
pub const INTRINSIC_GAS: u64 = 21_000;

/// Default block gas limit.
pub const BLOCK_GAS_LIMIT: u64 = 9_991_391;

/// SSTORE setting a slot from zero to non-zero.
pub const G_SSET: u64 = 20_000;
/// SLOAD of a 256-bit value.
pub const G_SLOAD: u64 = 200;
/// JUMPDEST marker.
pub const G_JUMPDEST: u64 = 1;

/// How contract invocations are priced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GasMode {
    /// Charge the calibrated per-method table (bit-reproducible costs).
    #[default]
    Measured,
    /// Charge intrinsic gas plus the storage-operation trace.
    Micro,
}

/// Per-method cost keys in measured mode. Enactment is keyed by outcome
/// because a failed majority check costs less than a successful one, and
/// license-move proposals are keyed by who proposes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GasKey {
    ProposeAddAuthority,
    ProposeRemoveAuthority,
    Vote,
    EnactAddAuthority,
    EnactRemoveAuthority,
    EnactNoMajority,
    AddTrustTreatmentProvider,
    RemoveTrustTreatmentProvider,
    AddTrustLicenseIssuer,
    RemoveTrustLicenseIssuer,
    AddTrustLicenseProvider,
    RemoveTrustLicenseProvider,
    RegisterTreatmentProvider,
    RegisterLicenseIssuer,
    RegisterLicenseProvider,
    IssueLicense,
    ProposeLicenseMoveByHolder,
    ProposeLicenseMoveByIssuer,
    ApproveLicenseMoveIssuer,
    ApproveLicenseMoveProvider,
    CreateTreatment,
    ApproveTreatment,
    SubmitEvaluation,
}

impl GasKey {
    pub const ALL: [GasKey; 23] = [
        GasKey::ProposeAddAuthority,
        GasKey::ProposeRemoveAuthority,
        GasKey::Vote,
        GasKey::EnactAddAuthority,
        GasKey::EnactRemoveAuthority,
        GasKey::EnactNoMajority,
        GasKey::AddTrustTreatmentProvider,
        GasKey::RemoveTrustTreatmentProvider,
        GasKey::AddTrustLicenseIssuer,
        GasKey::RemoveTrustLicenseIssuer,
        GasKey::AddTrustLicenseProvider,
        GasKey::RemoveTrustLicenseProvider,
        GasKey::RegisterTreatmentProvider,
        GasKey::RegisterLicenseIssuer,
        GasKey::RegisterLicenseProvider,
        GasKey::IssueLicense,
        GasKey::ProposeLicenseMoveByHolder,
        GasKey::ProposeLicenseMoveByIssuer,
        GasKey::ApproveLicenseMoveIssuer,
        GasKey::ApproveLicenseMoveProvider,
        GasKey::CreateTreatment,
        GasKey::ApproveTreatment,
        GasKey::SubmitEvaluation,
    ];

    /// Calibrated single-node measurement for this invocation.
    pub fn measured_cost(self) -> u64 {
        match self {
            GasKey::ProposeAddAuthority => 179_013,
            GasKey::ProposeRemoveAuthority => 149_040,
            GasKey::Vote => 73_686,
            GasKey::EnactAddAuthority => 64_297,
            GasKey::EnactRemoveAuthority => 45_332,
            GasKey::EnactNoMajority => 28_045,
            GasKey::AddTrustTreatmentProvider => 93_707,
            GasKey::RemoveTrustTreatmentProvider => 22_909,
            GasKey::AddTrustLicenseIssuer => 48_863,
            GasKey::RemoveTrustLicenseIssuer => 18_829,
            GasKey::AddTrustLicenseProvider => 48_906,
            GasKey::RemoveTrustLicenseProvider => 15_965,
            GasKey::RegisterTreatmentProvider => 85_959,
            GasKey::RegisterLicenseIssuer => 71_059,
            GasKey::RegisterLicenseProvider => 86_036,
            GasKey::IssueLicense => 88_538,
            GasKey::ProposeLicenseMoveByHolder => 46_059,
            GasKey::ProposeLicenseMoveByIssuer => 46_092,
            GasKey::ApproveLicenseMoveIssuer => 23_040,
            GasKey::ApproveLicenseMoveProvider => 38_019,
            GasKey::CreateTreatment => 200_118,
            GasKey::ApproveTreatment => 102_721,
            GasKey::SubmitEvaluation => 143_669,
        }
    }

    pub fn name(self) -> String {
        serde_json::to_value(self)
            .expect("gas key serializes")
            .as_str()
            .expect("gas key is a string")
            .to_owned()
    }
}

/// Measured-mode cost table with optional per-method overrides.
#[derive(Clone, Debug, Default)]
pub struct GasTable {
    overrides: BTreeMap<GasKey, u64>,
}

impl GasTable {
    pub fn with_overrides(overrides: BTreeMap<GasKey, u64>) -> GasTable {
        GasTable { overrides }
    }

    pub fn cost(&self, key: GasKey) -> u64 {
        self.overrides
            .get(&key)
            .copied()
            .unwrap_or_else(|| key.measured_cost())
    }

    pub fn entries(&self) -> Vec<(GasKey, u64)> {
        GasKey::ALL.iter().map(|&k| (k, self.cost(k))).collect()
    }
}

/// A storage operation observed while executing a contract method.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StorageOp {
    /// Store into a slot whose prior value was zero.
    StoreFromZero,
    Load,
    JumpDest,
}

impl StorageOp {
    pub fn cost(self) -> u64 {
        match self {
            StorageOp::StoreFromZero => G_SSET,
            StorageOp::Load => G_SLOAD,
            StorageOp::JumpDest => G_JUMPDEST,
        }
    }
}

/// Intrinsic gas plus the summed trace costs.
pub fn micro_gas_cost(trace: &[StorageOp]) -> u64 {
    INTRINSIC_GAS + trace.iter().map(|op| op.cost()).sum::<u64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_trace_is_intrinsic_only() {
        assert_eq!(micro_gas_cost(&[]), 21_000);
    }

    #[test]
    fn store_plus_load() {
        assert_eq!(
            micro_gas_cost(&[StorageOp::StoreFromZero, StorageOp::Load]),
            41_200
        );
    }

    #[test]
    fn three_fresh_stores() {
        assert_eq!(micro_gas_cost(&[StorageOp::StoreFromZero; 3]), 81_000);
    }

    #[test]
    fn table_override_applies() {
        let mut overrides = BTreeMap::new();
        overrides.insert(GasKey::Vote, 99);
        let table = GasTable::with_overrides(overrides);
        assert_eq!(table.cost(GasKey::Vote), 99);
        assert_eq!(table.cost(GasKey::CreateTreatment), 200_118);
    }

    #[test]
    fn all_keys_have_distinct_costs_matching_the_calibration() {
        let table = GasTable::default();
        let entries = table.entries();
        assert_eq!(entries.len(), 23);
        assert_eq!(table.cost(GasKey::CreateTreatment), 200_118);
        assert_eq!(table.cost(GasKey::ApproveTreatment), 102_721);
        assert_eq!(table.cost(GasKey::SubmitEvaluation), 143_669);
        assert_eq!(table.cost(GasKey::EnactNoMajority), 28_045);
    }

    #[test]
    fn key_names_are_snake_case() {
        assert_eq!(GasKey::CreateTreatment.name(), "create_treatment");
        assert_eq!(
            GasKey::ProposeLicenseMoveByIssuer.name(),
            "propose_license_move_by_issuer"
        );
    }
}
