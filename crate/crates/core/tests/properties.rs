use gls_core::model::{
    baseline_emissions, blended_emissions, effective_alpha, gls_emissions, ideal_reduction,
    shifted_loads, ShiftPolicy, SiteClass,
};
use gls_core::oracle::{compare_with_means, Coupling, Distribution, TraceSpec};
use gls_core::scenario::{
    fossil_ci_backout, load_scenario, solar_beta, wind_beta, OpSource, RegionProfile,
    ScenarioConfig,
};
use gls_core::NodePowerModel;
use proptest::prelude::*;

fn class() -> impl Strategy<Value = SiteClass> {
    (
        1u32..6,
        1u32..2000,
        0.0..=1.0f64,
        0.0..6000.0f64,
        0.0..20_000.0f64,
    )
        .prop_map(
            |(site_count, nodes_per_site, load, embodied_per_node_kg, op_full_per_node_kg)| {
                SiteClass {
                    site_count,
                    nodes_per_site,
                    load,
                    embodied_per_node_kg,
                    op_full_per_node_kg,
                }
            },
        )
}

fn policy() -> impl Strategy<Value = ShiftPolicy> {
    (0.0..=1.0f64, 0.0..=1.0f64, 0.0..0.05f64).prop_map(|(alpha, beta, eta)| ShiftPolicy {
        alpha,
        beta,
        eta,
    })
}

/// Twin classes sharing node count and embodied carbon, high class dirtier.
fn twin_pair() -> impl Strategy<Value = (SiteClass, SiteClass)> {
    (class(), 1u32..6, 0.0..=1.0f64, 0.0..1.0f64).prop_map(|(hi, lo_sites, lo_load, ratio)| {
        let hi = SiteClass {
            op_full_per_node_kg: hi.op_full_per_node_kg + 1.0,
            ..hi
        };
        let lo = SiteClass {
            site_count: lo_sites,
            load: lo_load,
            op_full_per_node_kg: hi.op_full_per_node_kg * ratio,
            ..hi
        };
        (hi, lo)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn load_is_conserved(hi in class(), lo in class(), alpha in 0.0..=1.0f64) {
        let alpha_eff = effective_alpha(alpha, &hi, &lo);
        let (new_hi, new_lo) = shifted_loads(alpha_eff, &hi, &lo);
        let (nh, nl) = (f64::from(hi.site_count), f64::from(lo.site_count));
        let before = nh * hi.load + nl * lo.load;
        let after = nh * new_hi + nl * new_lo;
        prop_assert!((before - after).abs() <= 1e-12 * before.max(1.0));
    }

    #[test]
    fn alpha_is_capped(hi in class(), lo in class(), alpha in 0.0..=1.0f64) {
        let alpha_eff = effective_alpha(alpha, &hi, &lo);
        prop_assert!((0.0..=alpha).contains(&alpha_eff));
        let (new_hi, new_lo) = shifted_loads(alpha_eff, &hi, &lo);
        prop_assert!(new_lo <= 1.0 + 1e-12, "{new_lo}");
        prop_assert!(new_hi >= 0.0);
    }

    #[test]
    fn no_time_or_nothing_moved_is_baseline(
        hi in class(), lo in class(), gamma in 0.0..=1.0f64, p in policy()
    ) {
        prop_assume!(baseline_emissions(&hi, &lo, gamma) > 0.0);
        let never = ShiftPolicy { beta: 0.0, ..p };
        let r = blended_emissions(&hi, &lo, gamma, &never).unwrap();
        prop_assert_eq!(r.blended_total, r.baseline_total);
        prop_assert_eq!(r.reduction, 0.0);
        let nothing = ShiftPolicy { alpha: 0.0, ..p };
        let r = blended_emissions(&hi, &lo, gamma, &nothing).unwrap();
        prop_assert_eq!(r.blended_total, r.baseline_total);
    }

    #[test]
    fn symmetric_sites_gain_nothing(
        hi in class(), lo_sites in 1u32..6, gamma in 0.0..=1.0f64, p in policy()
    ) {
        let lo = SiteClass { site_count: lo_sites, ..hi };
        prop_assume!(baseline_emissions(&hi, &lo, gamma) > 0.0);
        let p = ShiftPolicy { eta: 0.0, ..p };
        let r = blended_emissions(&hi, &lo, gamma, &p).unwrap();
        prop_assert!((r.gls_total - r.baseline_total).abs() <= 1e-12 * r.baseline_total);
        prop_assert!(r.reduction.abs() <= 1e-12);
    }

    #[test]
    fn itemisation_adds_up(hi in class(), lo in class(), gamma in 0.0..=1.0f64, p in policy()) {
        prop_assume!(baseline_emissions(&hi, &lo, gamma) > 0.0);
        let r = blended_emissions(&hi, &lo, gamma, &p).unwrap();
        let sum = r.embodied_total + r.op_hi + r.op_lo + r.overhead;
        prop_assert!((sum - r.blended_total).abs() <= 1e-9 * r.blended_total);
        prop_assert!(r.baseline_total >= r.embodied_total);
        let direct = p.beta * gls_emissions(&hi, &lo, gamma, &p) + (1.0 - p.beta) * r.baseline_total;
        prop_assert!((direct - r.blended_total).abs() <= 1e-9 * r.blended_total);
    }

    #[test]
    fn reduction_is_linear_in_beta(
        (hi, lo) in twin_pair(), gamma in 0.0..=1.0f64, p in policy()
    ) {
        prop_assume!(baseline_emissions(&hi, &lo, gamma) > 0.0);
        let at = |beta| blended_emissions(&hi, &lo, gamma, &ShiftPolicy { beta, ..p }).unwrap();
        let full = at(1.0);
        let slope = (full.baseline_total - full.gls_total) / full.baseline_total;
        let r = at(p.beta);
        prop_assert!((r.reduction - p.beta * slope).abs() <= 1e-12);
    }

    #[test]
    fn reduction_falls_with_idle_power_and_embodied_carbon(
        (hi, lo) in twin_pair(),
        gammas in (0.0..=1.0f64, 0.0..=1.0f64),
        extra_embodied in 0.0..5000.0f64,
        p in policy()
    ) {
        let p = ShiftPolicy { eta: 0.0, ..p };
        let (g_low, g_high) = if gammas.0 <= gammas.1 { gammas } else { (gammas.1, gammas.0) };
        prop_assume!(baseline_emissions(&hi, &lo, g_low) > 0.0);
        let r = |hi: &SiteClass, lo: &SiteClass, g| blended_emissions(hi, lo, g, &p).unwrap().reduction;
        prop_assert!(r(&hi, &lo, g_high) <= r(&hi, &lo, g_low) + 1e-12);

        let bump = |c: SiteClass| SiteClass { embodied_per_node_kg: c.embodied_per_node_kg + extra_embodied, ..c };
        prop_assert!(r(&bump(hi), &bump(lo), g_low) <= r(&hi, &lo, g_low) + 1e-12);
    }

    #[test]
    fn general_model_reduces_to_ideal_bound(
        c_hi in 1.0..20_000.0f64, ratio in 0.0..=1.0f64, step in 1usize..=10, nodes in 1u32..500
    ) {
        let load = step as f64 / 10.0;
        let c_lo = c_hi * ratio;
        let site = |op| SiteClass {
            site_count: 1,
            nodes_per_site: nodes,
            load,
            embodied_per_node_kg: 0.0,
            op_full_per_node_kg: op,
        };
        let p = ShiftPolicy { alpha: 1.0, beta: 1.0, eta: 0.0 };
        let r = blended_emissions(&site(c_hi), &site(c_lo), 0.0, &p).unwrap().reduction;
        let ideal = ideal_reduction(c_hi, c_lo, load).unwrap();
        prop_assert!((r - ideal).abs() <= 1e-12, "{r} vs {ideal} at {load}");
    }

    #[test]
    fn fossil_backout_inverts_daily_average(
        renewable in 0.0..200.0f64, fossil_extra in 0.0..800.0f64, hours in 0.5..23.5f64
    ) {
        let fossil = renewable + fossil_extra;
        let average = (hours * renewable + (24.0 - hours) * fossil) / 24.0;
        let profile = RegionProfile {
            renewable_hours_per_day: hours,
            ..RegionProfile::solar("r", average, renewable)
        };
        let back = fossil_ci_backout(&profile).unwrap();
        prop_assert!((back - fossil).abs() <= 1e-12 * fossil.max(1.0));
    }

    #[test]
    fn betas_are_fractions(
        sunshine in proptest::collection::vec(0.0..5000.0f64, 1..6),
        always in 0u32..5,
        overlap in 0.0..=1.0f64,
        ideal in 0.01..=1.0f64,
        share in 0.0..=1.0f64,
        penalty in 0.0..=1.0f64,
    ) {
        let profiles: Vec<_> = sunshine
            .iter()
            .map(|&h| RegionProfile::solar("r", 300.0, 40.0).with_sunshine_hours(h))
            .collect();
        let b = solar_beta(&profiles, always, overlap).unwrap();
        prop_assert!((0.0..=1.0).contains(&b));
        let w = wind_beta(ideal, ideal * share, penalty).unwrap();
        prop_assert!((0.0..=1.0).contains(&w));
    }
}

fn scenario() -> impl Strategy<Value = ScenarioConfig> {
    (
        (twin_pair(), 0.0..=1.0f64, policy()),
        (
            any::<bool>(),
            10.0..5000.0f64,
            1.0..2.0f64,
            0.0..900.0f64,
            0.0..0.1f64,
        ),
    )
        .prop_map(
            |(((hi, lo), gamma, policy), (derive, power, pue, ci, nu))| {
                let mut config = ScenarioConfig {
                    name: "random_case".into(),
                    hi,
                    lo,
                    gamma,
                    policy,
                    hi_source: OpSource::Direct,
                    lo_source: OpSource::Direct,
                    notes: vec![],
                };
                if derive {
                    let model = NodePowerModel::new(power, gamma, pue, ci)
                        .unwrap()
                        .with_network_overhead(nu)
                        .unwrap();
                    config.lo.op_full_per_node_kg = model.op_full_per_node_kg();
                    config.lo_source = OpSource::PowerModel(model);
                }
                config
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn scenario_text_round_trips(config in scenario()) {
        let parsed = load_scenario(&config.to_string()).unwrap();
        let again = load_scenario(&parsed.to_string()).unwrap();
        prop_assert_eq!(&parsed.hi, &config.hi);
        prop_assert_eq!(&parsed.lo, &config.lo);
        prop_assert_eq!(parsed.policy, config.policy);
        prop_assert_eq!(parsed.lo_source, config.lo_source);
        prop_assert_eq!(again, parsed);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn trace_minus_sample_means_is_the_covariance(
        seed in any::<u64>(),
        steps in 1u64..5000,
        gamma in 0.0..=1.0f64,
        correlated in any::<bool>(),
    ) {
        let spec = TraceSpec {
            coupling: if correlated { Coupling::Comonotone } else { Coupling::Independent },
            load: Distribution::TwoPoint { low: 0.1, high: 0.95, p_high: 0.6 },
            ..TraceSpec::with_defaults(steps, seed)
        };
        let c = compare_with_means(&spec, gamma, 444.0).unwrap();
        prop_assert!((c.trace_total - c.sample_mean_total - c.covariance_term).abs() <= 1e-9);
    }
}
