use std::collections::BTreeSet;

use proptest::prelude::*;

use eicp::codes::{
    can_decode, can_decode_from_others, verify_code, EmbeddedIndexCode, Transmission,
};
use eicp::covers::{biclique_cover, tree_cover};
use eicp::gf::{EchelonBasis, FieldOrder, GfMatrix, GfVector};
use eicp::graphs::{canonical_form, SideInfoBipartiteGraph};
use eicp::minrank::{
    extract_code, minrank_bnb, minrank_exhaustive, minrank_oracle, MinrankOptions,
    DEFAULT_ORACLE_BUDGET,
};
use eicp::model::{
    classify, gen_random, parse_instance, serialize_instance, validate, EicpInstance,
};

fn field() -> impl Strategy<Value = FieldOrder> {
    prop::sample::select(vec![2u32, 3, 5, 7]).prop_map(|q| FieldOrder::new(q).unwrap())
}

fn matrix() -> impl Strategy<Value = GfMatrix> {
    (field(), 1usize..=4, 1usize..=5).prop_flat_map(|(q, r, c)| {
        prop::collection::vec(0..q.get() as i64, r * c)
            .prop_map(move |e| GfMatrix::new(q, r, c, e).unwrap())
    })
}

fn instance(max_n: usize, max_m: usize) -> impl Strategy<Value = EicpInstance> {
    (
        2..=max_n,
        2..=max_m,
        any::<u64>(),
        prop::sample::select(vec![2u32, 3]),
    )
        .prop_filter_map("generation failed", |(n, m, seed, q)| {
            gen_random(n, m, FieldOrder::new(q).unwrap(), 0.5, seed).ok()
        })
}

// Row space size by enumerating every combination of rows.
fn span_size(m: &GfMatrix) -> usize {
    let q = m.field();
    let qq = q.get() as usize;
    let mut seen = BTreeSet::new();
    for mut code in 0..qq.pow(m.rows() as u32) {
        let mut acc = GfVector::zero(q, m.cols());
        for r in 0..m.rows() {
            acc = acc.add(&m.row(r).scaled((code % qq) as u8)).unwrap();
            code /= qq;
        }
        seen.insert(acc.coords().to_vec());
    }
    seen.len()
}

fn random_code(inst: &EicpInstance, picks: &[(usize, u64)]) -> Option<EmbeddedIndexCode> {
    let q = inst.q();
    let m = inst.num_messages();
    let mut ts = Vec::new();
    for &(u, bits) in picks {
        let u = u % inst.num_users();
        let mut b = bits;
        let coords: Vec<i64> = (0..m)
            .map(|x| {
                let c = (b % q.get() as u64) as i64;
                b /= q.get() as u64;
                if inst.knows(u, x) {
                    c
                } else {
                    0
                }
            })
            .collect();
        let v = GfVector::new(q, coords);
        if !v.is_zero() {
            ts.push(Transmission::new(u, v));
        }
    }
    if ts.is_empty() {
        return None;
    }
    Some(EmbeddedIndexCode::new(q, m, ts).unwrap())
}

fn decodability(code: &EmbeddedIndexCode, inst: &EicpInstance) -> Vec<bool> {
    (0..inst.num_users())
        .map(|u| can_decode(code, inst, u))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rank_matches_span_size(m in matrix()) {
        let r = m.rank();
        prop_assert_eq!(span_size(&m), (m.field().get() as usize).pow(r as u32));
        prop_assert_eq!(m.transpose().rank(), r);
        let mut basis = EchelonBasis::new(m.field(), m.cols());
        for i in 0..m.rows() {
            basis.insert(&m.row(i)).unwrap();
        }
        prop_assert_eq!(basis.rank(), r);
        for i in 0..m.rows() {
            prop_assert!(basis.in_span(&m.row(i)).unwrap());
        }
    }

    #[test]
    fn decodability_invariances(
        inst in instance(4, 4),
        picks in prop::collection::vec((0usize..8, any::<u64>()), 1..6),
        scale in 1u8..7,
        rot in 0usize..6,
        which in (0usize..6, 0usize..6),
    ) {
        let Some(code) = random_code(&inst, &picks) else { return Ok(()) };
        let q = inst.q();
        let base = decodability(&code, &inst);
        let len = code.len();

        let mut ts = code.transmissions().to_vec();
        let a = 1 + scale % (q.get() - 1);
        let i = rot % len;
        ts[i] = Transmission::new(ts[i].transmitter, ts[i].coeffs.scaled(a));
        prop_assert_eq!(decodability(&code.with_transmissions(ts.clone()).unwrap(), &inst), base.clone());

        ts.rotate_left(rot % len);
        ts.reverse();
        prop_assert_eq!(decodability(&code.with_transmissions(ts.clone()).unwrap(), &inst), base.clone());

        let (x, y) = (which.0 % len, which.1 % len);
        let t = ts[x].transmitter;
        let sum = ts[x].coeffs.add(&ts[y].coeffs).unwrap();
        if !sum.is_zero() && sum.supported_in(inst.side_info(t)) {
            ts.push(Transmission::new(t, sum));
            prop_assert_eq!(decodability(&code.with_transmissions(ts).unwrap(), &inst), base.clone());
        }

        let own: Vec<bool> = (0..inst.num_users()).map(|u| can_decode_from_others(&code, &inst, u)).collect();
        prop_assert_eq!(own, base);
    }

    #[test]
    fn minrank_matches_exhaustive_and_bounds(inst in instance(4, 4)) {
        let r = minrank_bnb(&inst, MinrankOptions::default()).unwrap();
        let ex = minrank_exhaustive(&inst, 1_000_000).unwrap();
        prop_assert_eq!(r.kappa, ex.kappa);
        prop_assert!(r.kappa <= inst.uniq_demands());
        let code = extract_code(&r, &inst);
        prop_assert_eq!(code.len(), r.kappa);
        prop_assert!(verify_code(&code, &inst).unwrap().overall);
        let par = minrank_bnb(&inst, MinrankOptions::parallel()).unwrap();
        prop_assert_eq!(&par.witness, &r.witness);
        prop_assert_eq!(par.kappa, r.kappa);
    }

    #[test]
    fn shortest_code_never_beats_nothing(inst in instance(4, 4)) {
        let k = minrank_bnb(&inst, MinrankOptions::default()).unwrap().kappa;
        let o = minrank_oracle(&inst, k, DEFAULT_ORACLE_BUDGET).unwrap();
        prop_assert!(o.found);
        prop_assert!(o.length <= k);
        prop_assert!(verify_code(o.code.as_ref().unwrap(), &inst).unwrap().overall);
        if o.length > 0 {
            let shorter = minrank_oracle(&inst, o.length - 1, DEFAULT_ORACLE_BUDGET).unwrap();
            prop_assert!(!shorter.found);
        }
    }

    #[test]
    fn side_info_growth_never_raises_minrank(
        inst in instance(4, 4),
        user in 0usize..4,
        pick in 0usize..4,
    ) {
        let u = user % inst.num_users();
        let extra: Vec<usize> = (0..inst.num_messages())
            .filter(|&x| !inst.knows(u, x) && x != inst.demand(u))
            .collect();
        prop_assume!(!extra.is_empty());
        let mut side = inst.all_side_info().to_vec();
        side[u].push(extra[pick % extra.len()]);
        side[u].sort_unstable();
        let grown = inst.with_side_info(side).unwrap();
        prop_assume!(validate(&grown).is_valid());
        let before = minrank_bnb(&inst, MinrankOptions::default()).unwrap().kappa;
        let after = minrank_bnb(&grown, MinrankOptions::default()).unwrap().kappa;
        prop_assert!(after <= before);
    }

    #[test]
    fn canonical_form_ignores_labels(
        inst in instance(4, 4),
        user_perm in Just(()).prop_perturb(|_, mut rng| {
            let mut p: Vec<usize> = (0..4).collect();
            for i in (1..4).rev() { p.swap(i, (rng.next_u32() as usize) % (i + 1)); }
            p
        }),
        msg_perm in Just(()).prop_perturb(|_, mut rng| {
            let mut p: Vec<usize> = (0..4).collect();
            for i in (1..4).rev() { p.swap(i, (rng.next_u32() as usize) % (i + 1)); }
            p
        }),
    ) {
        let n = inst.num_users();
        let m = inst.num_messages();
        let up: Vec<usize> = user_perm.into_iter().filter(|&u| u < n).collect();
        let mp: Vec<usize> = msg_perm.into_iter().filter(|&x| x < m).collect();
        let mut side = vec![Vec::new(); n];
        for u in 0..n {
            side[up[u]] = inst.side_info(u).iter().map(|&x| mp[x]).collect();
        }
        let g = SideInfoBipartiteGraph::from_instance(&inst);
        let h = SideInfoBipartiteGraph::from_side_info(m, &side);
        prop_assert_eq!(canonical_form(&g, 8).unwrap(), canonical_form(&h, 8).unwrap());
        prop_assert_eq!(g.is_connected(), h.is_connected());
    }

    #[test]
    fn instance_round_trip(inst in instance(6, 6)) {
        let text = serialize_instance(&inst);
        prop_assert_eq!(parse_instance(&text).unwrap(), inst);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cover_codes_verify_and_count(n in 3usize..=6, seed in any::<u64>()) {
        let Ok(inst) = gen_random(n, n, FieldOrder::BINARY, 0.5, seed) else { return Ok(()) };
        prop_assume!(classify(&inst).single_unicast);
        let k = minrank_bnb(&inst, MinrankOptions::default()).unwrap().kappa;
        for exact in [false, true] {
            let t = tree_cover(&inst, exact).unwrap();
            prop_assert!(verify_code(&t.code, &inst).unwrap().overall);
            prop_assert_eq!(t.counts.length, n - t.counts.k + t.counts.k_e);
            let b = biclique_cover(&inst, exact).unwrap();
            prop_assert!(verify_code(&b.code, &inst).unwrap().overall);
            prop_assert!(b.counts.k <= b.counts.length && b.counts.length <= 2 * b.counts.k);
            prop_assert!(t.counts.length <= n && b.counts.length <= n);
            let o = minrank_oracle(&inst, k, DEFAULT_ORACLE_BUDGET).unwrap();
            prop_assert!(o.length <= t.counts.length.min(b.counts.length));
        }
    }
}
