use super::{
    compute_gross_tcf, compute_net_tcf, compute_responsibility_ratios, compute_scope2, compute_scope3,
    scope1_attribution, AllocationError, DcFootprint, Footprint, HistorySource,
};
use crate::ingest::RawData;
use crate::power::ModelSet;
use crate::scope::{ComponentTotal, Scope2Category, ScopeBreakdown};
use crate::units::EmissionsG;

/// Footprints for every tenant, ordered by tenant id; each tenant's data
/// centers are ordered by id.
pub fn compute_footprints(
    raw: &RawData,
    models: &ModelSet,
    history: &dyn HistorySource,
) -> Result<Vec<Footprint>, AllocationError> {
    let scope2 = compute_scope2(raw, models)?;
    let ratios = compute_responsibility_ratios(&scope2, raw.tenants(), raw.datacenters())?;

    let mut footprints = Vec::with_capacity(raw.tenants().len());
    for tenant in raw.tenants() {
        let mut per_dc = Vec::new();
        for (s2, ratio) in scope2.iter().zip(&ratios).filter(|(s, _)| s.tenant_id == tenant.tenant_id) {
            let dc = raw.datacenter(&s2.datacenter_id).ok_or_else(|| AllocationError::Inconsistent {
                tenant_id: tenant.tenant_id.clone(),
                datacenter_id: s2.datacenter_id.clone(),
                reason: "data center record missing".into(),
            })?;
            let scope1_devices = scope1_attribution(dc, ratio);
            let scope2_components = Scope2Category::ALL
                .into_iter()
                .map(|c| {
                    let energy = s2.energy(c);
                    (c, ComponentTotal { energy, emissions: (energy * dc.grid_intensity) * s2.l_share })
                })
                .collect();
            let breakdown = ScopeBreakdown {
                scope1: scope1_devices.iter().map(|f| f.emissions).sum(),
                scope2: s2.emissions,
                scope3: compute_scope3(dc, ratio),
                scope2_components,
            };
            let gross = compute_gross_tcf(&breakdown);
            let net = compute_net_tcf(gross, dc, ratio);
            per_dc.push(DcFootprint {
                datacenter_id: dc.datacenter_id.clone(),
                name: dc.name.clone(),
                region: dc.region.clone(),
                ratio: ratio.clone(),
                breakdown,
                scope2: s2.clone(),
                scope1_devices,
                scope3_dc_total: dc.scope3_total,
                gross,
                net: net.net,
                offsets: net.offsets,
                over_offset: net.over_offset,
            });
        }

        let gross_total: EmissionsG = per_dc.iter().map(|d| d.gross).sum();
        let net_total: EmissionsG = per_dc.iter().map(|d| d.net).sum();
        let history = history
            .prior(&tenant.tenant_id, raw.period())
            .map_err(|source| AllocationError::History { tenant_id: tenant.tenant_id.clone(), source })?;
        footprints.push(Footprint {
            tenant_id: tenant.tenant_id.clone(),
            display_name: tenant.display_name.clone(),
            agent_count: tenant.agent_count,
            period: raw.period(),
            per_agent: gross_total.scale(1.0 / tenant.agent_count as f64),
            per_dc,
            gross_total,
            net_total,
            history,
        });
    }
    Ok(footprints)
}
