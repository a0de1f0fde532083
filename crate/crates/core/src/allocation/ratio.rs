use std::collections::BTreeMap;

use super::{AllocationError, FuelContribution, Offsets, ResponsibilityRatio, TenantDcScope2};
use crate::ingest::{DataCenterRecord, TenantRecord};
use crate::scope::ScopeBreakdown;
use crate::units::{EmissionsG, Share};

/// λ and `r` for every (tenant, data center) Scope 2 record, in input order.
///
/// λ is the tenant's Scope 2 over the sum of all tenants' Scope 2 in the
/// same data center; `r = λ × L_share`. A data center with zero total
/// Scope 2 gets λ = 0 for everyone, unless it has Scope 1 or Scope 3 to
/// hand out, in which case the split is undefined and this fails.
pub fn compute_responsibility_ratios(
    scope2: &[TenantDcScope2],
    tenants: &[TenantRecord],
    datacenters: &[DataCenterRecord],
) -> Result<Vec<ResponsibilityRatio>, AllocationError> {
    let mut dc_totals: BTreeMap<&str, EmissionsG> = BTreeMap::new();
    for s in scope2 {
        *dc_totals.entry(&s.datacenter_id).or_default() += s.emissions;
    }

    scope2
        .iter()
        .map(|s| {
            let inconsistent = |reason: String| AllocationError::Inconsistent {
                tenant_id: s.tenant_id.clone(),
                datacenter_id: s.datacenter_id.clone(),
                reason,
            };
            let tenant = tenants
                .iter()
                .find(|t| t.tenant_id == s.tenant_id)
                .ok_or_else(|| inconsistent("tenant record missing".into()))?;
            let total = dc_totals[s.datacenter_id.as_str()];
            let lambda = if total.value() > 0.0 {
                Share::from_ratio(s.emissions.value() / total.value()).map_err(|e| inconsistent(e.to_string()))?
            } else {
                let dc = datacenters.iter().find(|d| d.datacenter_id == s.datacenter_id);
                let needs_split =
                    dc.is_some_and(|d| d.fuel_emissions_total().value() > 0.0 || d.scope3_total.value() > 0.0);
                if needs_split {
                    return Err(AllocationError::ZeroDcScope2 { datacenter_id: s.datacenter_id.clone() });
                }
                Share::ZERO
            };
            Ok(ResponsibilityRatio {
                tenant_id: s.tenant_id.clone(),
                datacenter_id: s.datacenter_id.clone(),
                lambda,
                l_share: tenant.l_share,
                r: lambda * tenant.l_share,
            })
        })
        .collect()
}

/// Per-device Scope 1 attribution: `fuel × c_device × r`.
pub fn scope1_attribution(dc: &DataCenterRecord, r: &ResponsibilityRatio) -> Vec<FuelContribution> {
    dc.fuel_log
        .iter()
        .map(|f| FuelContribution {
            device_id: f.device_id.clone(),
            fuel_grams: f.fuel_grams,
            fuel_intensity: f.fuel_intensity,
            emissions: EmissionsG::gross(f.fuel_grams * f.fuel_intensity.value()).unwrap_or_default() * r.r,
        })
        .collect()
}

/// A tenant's Scope 1 in one data center.
///
/// ```
/// use tcf_core::allocation::{compute_scope1, ResponsibilityRatio};
/// # use tcf_core::ingest::{DataCenterRecord, FuelEntry};
/// # use tcf_core::units::*;
/// # let mut dc = DataCenterRecord {
/// #     datacenter_id: "DC".into(), name: String::new(), region: String::new(),
/// #     grid_intensity: CarbonIntensity::new(0.4).unwrap(), cooling_devices: vec![],
/// #     other_devices: vec![], fuel_log: vec![], scope3_total: EmissionsG::ZERO,
/// #     green_energy: EnergyWh::ZERO, rec_offset: EmissionsG::ZERO, line: 0,
/// # };
/// dc.fuel_log.push(FuelEntry {
///     device_id: "GEN_1".into(),
///     fuel_grams: 1000.0,
///     fuel_intensity: CarbonIntensity::new(2.5).unwrap(),
/// });
/// let quarter = Share::new(0.25).unwrap();
/// let r = ResponsibilityRatio {
///     tenant_id: "T".into(), datacenter_id: "DC".into(),
///     lambda: quarter, l_share: Share::ONE, r: quarter,
/// };
/// assert_eq!(compute_scope1(&dc, &r).value(), 625.0);
/// ```
pub fn compute_scope1(dc: &DataCenterRecord, r: &ResponsibilityRatio) -> EmissionsG {
    scope1_attribution(dc, r).iter().map(|f| f.emissions).sum()
}

/// A tenant's Scope 3 in one data center: `Scope_3^DC × r`.
pub fn compute_scope3(dc: &DataCenterRecord, r: &ResponsibilityRatio) -> EmissionsG {
    dc.scope3_total * r.r
}

/// Gross footprint, the sum of the three scopes.
pub fn compute_gross_tcf(breakdown: &ScopeBreakdown) -> EmissionsG {
    breakdown.scope1 + breakdown.scope2 + breakdown.scope3
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetTcf {
    pub net: EmissionsG,
    pub offsets: Offsets,
    /// Offsets exceed gross emissions.
    pub over_offset: bool,
}

/// Net footprint in one data center: gross minus the tenant's `r`-weighted
/// share of the data center's green-energy and certificate offsets.
pub fn compute_net_tcf(gross_per_dc: EmissionsG, dc: &DataCenterRecord, r: &ResponsibilityRatio) -> NetTcf {
    let green = (dc.green_energy * dc.grid_intensity) * r.r;
    let rec = dc.rec_offset * r.r;
    let net = gross_per_dc - green - rec;
    NetTcf { net, offsets: Offsets { green, rec }, over_offset: net.is_negative() }
}

#[cfg(test)]
mod tests {
    use super::super::compute_scope2;
    use super::super::fixtures::*;
    use super::*;
    use crate::scope::{ComponentTotal, Scope2Category};
    use crate::units::{CarbonIntensity, EnergyWh};

    fn ratio(r: f64) -> ResponsibilityRatio {
        ResponsibilityRatio {
            tenant_id: "T".into(),
            datacenter_id: "DC".into(),
            lambda: Share::new(r).unwrap(),
            l_share: Share::ONE,
            r: Share::new(r).unwrap(),
        }
    }

    fn scope2_record(tenant: &str, dc_id: &str, emissions: f64) -> TenantDcScope2 {
        TenantDcScope2 {
            tenant_id: tenant.into(),
            datacenter_id: dc_id.into(),
            grid_intensity: CarbonIntensity::new(0.4).unwrap(),
            l_share: Share::ONE,
            e_server: wh(emissions / 0.4),
            e_network: EnergyWh::ZERO,
            e_cooling: EnergyWh::ZERO,
            e_other: EnergyWh::ZERO,
            emissions: g(emissions),
            servers: vec![],
            network: vec![],
            cooling: vec![],
            other: vec![],
        }
    }

    #[test]
    fn lambda_quarter_of_dc() {
        let s2 = vec![scope2_record("A", "DC", 1_800_000.0), scope2_record("B", "DC", 5_400_000.0)];
        let tenants = vec![tenant("A", &["DC"]), tenant("B", &["DC"])];
        let r = compute_responsibility_ratios(&s2, &tenants, &[dc("DC", 0.4)]).unwrap();
        assert_eq!(r[0].lambda.value(), 0.25);
        assert_eq!(r[0].r.value(), 0.25);
        assert_eq!(r[1].lambda.value(), 0.75);
    }

    #[test]
    fn sole_tenant_gets_lambda_one() {
        let s2 = vec![scope2_record("A", "DC", 123.0)];
        let mut t = tenant("A", &["DC"]);
        t.l_share = Share::new(0.6).unwrap();
        let r = compute_responsibility_ratios(&s2, &[t], &[dc("DC", 0.4)]).unwrap();
        assert_eq!(r[0].lambda, Share::ONE);
        assert_eq!(r[0].r.value(), 0.6);
    }

    #[test]
    fn zero_scope2_with_scope3_to_split_fails() {
        let s2 = vec![scope2_record("A", "DC", 0.0)];
        let mut d = dc("DC", 0.4);
        assert_eq!(
            compute_responsibility_ratios(&s2, &[tenant("A", &["DC"])], &[d.clone()]).unwrap()[0].lambda,
            Share::ZERO
        );
        d.scope3_total = g(1.0);
        assert_eq!(
            compute_responsibility_ratios(&s2, &[tenant("A", &["DC"])], &[d]),
            Err(AllocationError::ZeroDcScope2 { datacenter_id: "DC".into() })
        );
    }

    #[test]
    fn scope1_values() {
        let mut d = dc("DC", 0.4);
        assert_eq!(compute_scope1(&d, &ratio(0.25)), EmissionsG::ZERO);
        d.fuel_log.push(crate::ingest::FuelEntry {
            device_id: "GEN_1".into(),
            fuel_grams: 1000.0,
            fuel_intensity: CarbonIntensity::new(2.5).unwrap(),
        });
        assert_eq!(compute_scope1(&d, &ratio(0.25)).value(), 625.0);
        assert_eq!(compute_scope1(&d, &ratio(0.0)).value(), 0.0);
    }

    #[test]
    fn scope3_values() {
        let mut d = dc("DC", 0.4);
        assert_eq!(compute_scope3(&d, &ratio(0.25)), EmissionsG::ZERO);
        d.scope3_total = g(500_000.0);
        assert_eq!(compute_scope3(&d, &ratio(0.25)).value(), 125_000.0);
        assert_eq!(compute_scope3(&d, &ratio(1.0)).value(), 500_000.0);
    }

    fn breakdown(s1: f64, s2: f64, s3: f64) -> ScopeBreakdown {
        ScopeBreakdown {
            scope1: g(s1),
            scope2: g(s2),
            scope3: g(s3),
            scope2_components: [(Scope2Category::Server, ComponentTotal { energy: wh(s2 / 0.4), emissions: g(s2) })]
                .into_iter()
                .collect(),
        }
    }

    #[test]
    fn gross_is_sum_of_scopes() {
        assert_eq!(compute_gross_tcf(&breakdown(0.0, 1_800_000.0, 0.0)).value(), 1_800_000.0);
        assert_eq!(compute_gross_tcf(&breakdown(625.0, 720_000.0, 125_000.0)).value(), 845_625.0);
        assert_eq!(compute_gross_tcf(&ScopeBreakdown::default()), EmissionsG::ZERO);
    }

    #[test]
    fn net_subtracts_weighted_offsets() {
        let mut d = dc("DC", 0.4);
        d.green_energy = wh(1_000_000.0);
        d.rec_offset = g(200_000.0);
        let n = compute_net_tcf(g(1_800_000.0), &d, &ratio(1.0));
        assert_eq!(n.offsets.green.value(), 400_000.0);
        assert_eq!(n.offsets.rec.value(), 200_000.0);
        assert_eq!(n.net.value(), 1_200_000.0);
        assert!(!n.over_offset);
    }

    #[test]
    fn net_equals_gross_without_offsets() {
        let n = compute_net_tcf(g(12_345.678), &dc("DC", 0.4), &ratio(0.3));
        assert_eq!(n.net.value(), 12_345.678);
    }

    #[test]
    fn over_offset_flagged() {
        let mut d = dc("DC", 0.4);
        d.rec_offset = g(5_000.0);
        let n = compute_net_tcf(g(1_000.0), &d, &ratio(1.0));
        assert_eq!(n.net.value(), -4_000.0);
        assert!(n.over_offset);
    }

    #[test]
    fn ratios_from_engine_output_sum_to_one() {
        let raw = two_tenant_raw();
        let s2 = compute_scope2(&raw, &models()).unwrap();
        let r = compute_responsibility_ratios(&s2, raw.tenants(), raw.datacenters()).unwrap();
        let eu: f64 = r.iter().filter(|x| x.datacenter_id == "DC_EU1").map(|x| x.lambda.value()).sum();
        assert!((eu - 1.0).abs() < 1e-12);
        assert_eq!(r.iter().find(|x| x.datacenter_id == "DC_US1").unwrap().lambda, Share::ONE);
    }
}
