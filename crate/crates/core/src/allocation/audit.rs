use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::Footprint;
use crate::ingest::RawData;
use crate::power::{network_energy_for_bytes, ModelSet};
use crate::scope::relative_residual;

/// Largest relative residual a conservation check may show.
pub const AUDIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditCheck {
    pub name: String,
    /// Data center or tenant the check is about.
    pub subject: String,
    pub expected: f64,
    pub actual: f64,
    pub residual: f64,
}

impl AuditCheck {
    fn new(name: &str, subject: &str, expected: f64, actual: f64) -> Self {
        AuditCheck {
            name: name.into(),
            subject: subject.into(),
            expected,
            actual,
            residual: relative_residual(expected, actual),
        }
    }

    pub fn passed(&self) -> bool {
        self.residual < AUDIT_TOLERANCE
    }
}

impl fmt::Display for AuditCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {}: expected {} got {} (residual {:.3e})",
            if self.passed() { "ok  " } else { "FAIL" },
            self.name,
            self.subject,
            self.expected,
            self.actual,
            self.residual
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub checks: Vec<AuditCheck>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(AuditCheck::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AuditCheck> {
        self.checks.iter().filter(|c| !c.passed())
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.residual).fold(0.0, f64::max)
    }
}

/// Per-tenant Scope 2 in one data center, recomputed from the raw inputs.
struct Recomputed {
    scope2: BTreeMap<String, f64>,
    l_share: BTreeMap<String, f64>,
}

fn recompute_dc(raw: &RawData, models: &ModelSet, dc_id: &str) -> Recomputed {
    let mut direct: BTreeMap<String, f64> = BTreeMap::new();
    let mut l_share = BTreeMap::new();
    for t in raw.tenants().iter().filter(|t| t.datacenter_ids.iter().any(|d| d == dc_id)) {
        direct.insert(t.tenant_id.clone(), 0.0);
        l_share.insert(t.tenant_id.clone(), t.l_share.value());
    }
    for row in raw.server_usage().iter().filter(|r| r.datacenter_id == dc_id) {
        if let (Some(e), Some(m)) = (direct.get_mut(&row.tenant_id), models.get(&row.device_model)) {
            *e += m.predict(row.cpu_utilization, row.cache_moved, row.dram_accessed, row.disk_moved).max(0.0);
        }
    }
    for row in raw.network_usage().iter().filter(|r| r.datacenter_id == dc_id) {
        if let Some(e) = direct.get_mut(&row.tenant_id) {
            *e += network_energy_for_bytes(row.bytes_sent as u128 + row.bytes_received as u128).value();
        }
    }
    let dc = raw.datacenter(dc_id);
    let shared = dc.map_or(0.0, |d| d.cooling_total().value() + d.other_total().value());
    let intensity = dc.map_or(0.0, |d| d.grid_intensity.value());
    let all: f64 = direct.values().sum();
    let scope2 = direct
        .iter()
        .map(|(t, e)| {
            let share = if all > 0.0 { e / all } else { 0.0 };
            (t.clone(), (e + shared * share) * intensity * l_share[t])
        })
        .collect();
    Recomputed { scope2, l_share }
}

/// Checks that the footprints hand out exactly what each data center holds.
///
/// The expected side of every check comes from the raw inputs, not from
/// the footprints, so a tampered number shows up as a residual.
pub fn conservation_audit(footprints: &[Footprint], raw: &RawData, models: &ModelSet) -> AuditReport {
    let mut checks = Vec::new();
    for dc in raw.datacenters() {
        let id = dc.datacenter_id.as_str();
        let parts: Vec<_> = footprints.iter().flat_map(|f| f.per_dc.iter()).filter(|d| d.datacenter_id == id).collect();
        let sum = |f: &dyn Fn(&super::DcFootprint) -> f64| parts.iter().map(|d| f(d)).sum::<f64>();

        let re = recompute_dc(raw, models, id);
        let dc_scope2: f64 = re.scope2.values().sum();
        checks.push(AuditCheck::new("scope2", id, dc_scope2, sum(&|d| d.breakdown.scope2.value())));

        let direct_any = parts.iter().any(|d| d.scope2.direct_energy().value() > 0.0);
        if direct_any {
            checks.push(AuditCheck::new(
                "cooling",
                id,
                dc.cooling_total().value(),
                sum(&|d| d.scope2.e_cooling.value()),
            ));
            checks.push(AuditCheck::new("other", id, dc.other_total().value(), sum(&|d| d.scope2.e_other.value())));
        }

        if dc_scope2 > 0.0 {
            checks.push(AuditCheck::new("lambda", id, 1.0, sum(&|d| d.ratio.lambda.value())));
            let mut r_sum = 0.0;
            for (tenant, s2) in &re.scope2 {
                let lambda = s2 / dc_scope2;
                r_sum += lambda * re.l_share[tenant];
                let stored = parts.iter().find(|d| &d.ratio.tenant_id == tenant);
                let actual = stored.map_or(0.0, |d| d.breakdown.scope2.value() / dc_scope2);
                checks.push(AuditCheck::new("implied_lambda", &format!("{id}/{tenant}"), lambda, actual));
            }
            let fuel = dc.fuel_emissions_total().value();
            let scope3 = dc.scope3_total.value();
            checks.push(AuditCheck::new("scope1", id, fuel * r_sum, sum(&|d| d.breakdown.scope1.value())));
            checks.push(AuditCheck::new("scope3", id, scope3 * r_sum, sum(&|d| d.breakdown.scope3.value())));
            checks.push(AuditCheck::new("gross", id, dc_scope2 + (fuel + scope3) * r_sum, sum(&|d| d.gross.value())));
        }
    }

    for fp in footprints {
        let gross: f64 = fp.per_dc.iter().map(|d| d.gross.value()).sum();
        let net: f64 = fp.per_dc.iter().map(|d| d.net.value()).sum();
        checks.push(AuditCheck::new("tenant_gross", &fp.tenant_id, gross, fp.gross_total.value()));
        checks.push(AuditCheck::new("tenant_net", &fp.tenant_id, net, fp.net_total.value()));
        for d in &fp.per_dc {
            let subject = format!("{}/{}", d.datacenter_id, fp.tenant_id);
            let b = &d.breakdown;
            checks.push(AuditCheck::new(
                "scope_sum",
                &subject,
                b.scope1.value() + b.scope2.value() + b.scope3.value(),
                d.gross.value(),
            ));
            checks.push(AuditCheck::new(
                "components",
                &subject,
                b.scope2.value(),
                b.scope2.value() * (1.0 - b.component_residual()),
            ));
            checks.push(AuditCheck::new("net", &subject, d.gross.value() - d.offsets.total().value(), d.net.value()));
        }
    }
    AuditReport { checks }
}
