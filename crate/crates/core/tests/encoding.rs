mod common;

use cudfsolve::criteria::{Criterion, Measure};
use cudfsolve::cudf::parse_document;
use cudfsolve::encoder::{
    at_most_one, build_objective, cardinality_leq, encode_keep, encode_problem, encode_request, encode_universe,
    totalizer, ClauseSet, VarMap,
};
use cudfsolve::rng::SplitMix64;
use cudfsolve::sat::{Lit, Var};
use cudfsolve::{PackageId, Request, Universe};
use proptest::prelude::*;

fn problem(text: &str) -> (Universe, Request) {
    let doc = parse_document(text).unwrap();
    (doc.universe().unwrap(), doc.request())
}

fn x(u: &Universe, name: &str, v: u64) -> Lit {
    let id = PackageId::new(name.parse().unwrap(), cudfsolve::Version::new(v).unwrap());
    Var(u.index_of(&id).unwrap() as u32).positive()
}

fn sorted(cs: &ClauseSet) -> Vec<Vec<Lit>> {
    let mut out: Vec<Vec<Lit>> = cs
        .iter()
        .map(|c| {
            let mut c = c.clone();
            c.sort();
            c
        })
        .collect();
    out.sort();
    out
}

fn set(clauses: Vec<Vec<Lit>>) -> Vec<Vec<Lit>> {
    let mut cs = ClauseSet::default();
    for c in clauses {
        cs.push(c);
    }
    sorted(&cs)
}

/// Can `fixed` (values of the first variables) be extended to a model of `clauses` over `total` variables?
fn extendable(clauses: &[Vec<Lit>], fixed: &[bool], total: usize) -> bool {
    let mut assign: Vec<Option<bool>> = fixed.iter().map(|&b| Some(b)).collect();
    assign.resize(total, None);
    common::dpll(clauses, &mut assign)
}

fn bits(n: usize, word: u32) -> Vec<bool> {
    (0..n).map(|i| word >> i & 1 == 1).collect()
}

// ------------------------------------------------------------ universe

#[test]
fn no_dependencies_no_clauses() {
    let (u, _) = problem("package: a\nversion: 1\n");
    assert!(encode_universe(&u, &VarMap::new(&u)).is_empty());
}

#[test]
fn disjunctive_dependency() {
    let (u, _) = problem("package: a\nversion: 1\ndepends: b | c\n\npackage: b\nversion: 1\n\npackage: c\nversion: 1\n");
    let got = sorted(&encode_universe(&u, &VarMap::new(&u)));
    assert_eq!(got, set(vec![vec![!x(&u, "a", 1), x(&u, "b", 1), x(&u, "c", 1)]]));
}

#[test]
fn unsatisfiable_dependency_forbids_the_package() {
    let (u, _) = problem("package: a\nversion: 1\ndepends: b >= 2\n\npackage: b\nversion: 1\n");
    let got = sorted(&encode_universe(&u, &VarMap::new(&u)));
    assert_eq!(got, set(vec![vec![!x(&u, "a", 1)]]));
    let (u, _) = problem("package: a\nversion: 1\ndepends: false!\n");
    assert_eq!(sorted(&encode_universe(&u, &VarMap::new(&u))), set(vec![vec![!x(&u, "a", 1)]]));
}

#[test]
fn conflicts_once_per_pair_and_never_with_self() {
    let text = "package: a\nversion: 1\nconflicts: b, a, feat\nprovides: feat\n\n\
                package: b\nversion: 1\nconflicts: a\n\npackage: c\nversion: 1\nprovides: feat\n";
    let (u, _) = problem(text);
    let got = sorted(&encode_universe(&u, &VarMap::new(&u)));
    let a = x(&u, "a", 1);
    assert_eq!(got, set(vec![vec![!a, !x(&u, "b", 1)], vec![!a, !x(&u, "c", 1)]]));
}

// ------------------------------------------------------------ request and keep

#[test]
fn request_examples() {
    let (u, r) = problem("package: attr\nversion: 18\n\nrequest:\ninstall: attr\n");
    let mut vm = VarMap::new(&u);
    assert_eq!(sorted(&encode_request(&u, &mut vm, &r)), set(vec![vec![x(&u, "attr", 18)]]));

    let (u, r) = problem("package: a\nversion: 1\n\npackage: a\nversion: 2\n\nrequest:\nremove: a\n");
    let mut vm = VarMap::new(&u);
    let want = set(vec![vec![!x(&u, "a", 1)], vec![!x(&u, "a", 2)]]);
    assert_eq!(sorted(&encode_request(&u, &mut vm, &r)), want);

    let (u, r) = problem("package: a\nversion: 1\ninstalled: true\n\npackage: a\nversion: 2\n\nrequest:\nupgrade: a\n");
    let mut vm = VarMap::new(&u);
    let (a1, a2) = (x(&u, "a", 1), x(&u, "a", 2));
    assert_eq!(sorted(&encode_request(&u, &mut vm, &r)), set(vec![vec![a1, a2], vec![!a1, !a2]]));
}

#[test]
fn install_without_provider_is_the_empty_clause() {
    let (u, r) = problem("package: a\nversion: 1\n\nrequest:\ninstall: zz\n");
    let mut vm = VarMap::new(&u);
    let got = encode_request(&u, &mut vm, &r);
    assert_eq!(got.clauses(), &[Vec::<Lit>::new()]);
}

#[test]
fn upgrade_forbids_versions_below_the_installed_one() {
    let text = "package: a\nversion: 1\n\npackage: a\nversion: 2\ninstalled: true\n\npackage: a\nversion: 3\n\n\
                request:\nupgrade: a\n";
    let (u, r) = problem(text);
    let mut vm = VarMap::new(&u);
    let got = sorted(&encode_request(&u, &mut vm, &r));
    assert!(got.contains(&vec![!x(&u, "a", 1)]));
    assert!(got.contains(&vec![x(&u, "a", 1), x(&u, "a", 2), x(&u, "a", 3)]));
}

#[test]
fn keep_examples() {
    let (u, _) = problem("package: a\nversion: 1\ninstalled: true\n");
    assert!(encode_keep(&u, &VarMap::new(&u)).is_empty());

    let (u, _) = problem("package: a\nversion: 1\ninstalled: true\nkeep: version\n");
    assert_eq!(sorted(&encode_keep(&u, &VarMap::new(&u))), set(vec![vec![x(&u, "a", 1)]]));

    let (u, _) = problem("package: a\nversion: 1\ninstalled: true\nkeep: package\n\npackage: a\nversion: 2\n");
    let want = set(vec![vec![x(&u, "a", 1), x(&u, "a", 2)]]);
    assert_eq!(sorted(&encode_keep(&u, &VarMap::new(&u))), want);

    let text = "package: a\nversion: 1\ninstalled: true\nkeep: feature\nprovides: f = 2\n\n\
                package: b\nversion: 1\nprovides: f\n\npackage: c\nversion: 1\nprovides: f = 2\n";
    let (u, _) = problem(text);
    let want = set(vec![vec![x(&u, "a", 1), x(&u, "c", 1)]]);
    assert_eq!(sorted(&encode_keep(&u, &VarMap::new(&u))), want);
}

// ------------------------------------------------------------ objectives

/// Every package assignment fixes every auxiliary by propagation and the
/// layer value equals the measure.
fn assert_layer_faithful(u: &Universe, m: Measure) {
    let mut vm = VarMap::new(u);
    let n = vm.num_vars();
    let layer = build_objective(u, &mut vm, &Criterion::minimize(m));
    for word in 0u32..1 << n {
        let member = bits(n, word);
        let mut assign: Vec<Option<bool>> = member.iter().map(|&b| Some(b)).collect();
        assign.resize(vm.num_vars(), None);
        common::propagate(layer.defining_clauses.clauses(), &mut assign).unwrap();
        let model: Vec<bool> = assign.iter().map(|v| v.expect("auxiliary left open")).collect();
        assert_eq!(layer.value(&model), common::measure(m, u, &member), "{m:?} at {word:b}");
    }
}

#[test]
fn removed_layer_empty_without_installed_packages() {
    let (u, _) = problem("package: a\nversion: 1\n\npackage: b\nversion: 1\n");
    let mut vm = VarMap::new(&u);
    assert!(build_objective(&u, &mut vm, &Criterion::minimize(Measure::Removed)).terms.is_empty());
}

#[test]
fn changed_layer_on_two_versions() {
    let (u, _) = problem("package: a\nversion: 1\ninstalled: true\n\npackage: a\nversion: 2\n");
    let mut vm = VarMap::new(&u);
    let layer = build_objective(&u, &mut vm, &Criterion::minimize(Measure::Changed));
    assert_eq!(layer.terms.len(), 1);
    assert_eq!(layer.terms[0].0, 1);
    assert_layer_faithful(&u, Measure::Changed);
}

#[test]
fn unsat_recommends_layer() {
    let (u, _) = problem("package: a\nversion: 1\nrecommends: b\n\npackage: b\nversion: 1\n");
    let mut vm = VarMap::new(&u);
    let layer = build_objective(&u, &mut vm, &Criterion::minimize(Measure::UnsatRecommends));
    assert_eq!(layer.terms.len(), 1);
    assert_layer_faithful(&u, Measure::UnsatRecommends);
}

#[test]
fn every_measure_on_a_mixed_universe() {
    let text = "package: a\nversion: 1\ninstalled: true\nrecommends: b | c, d\n\n\
                package: a\nversion: 2\n\npackage: a\nversion: 3\nrecommends: a\n\n\
                package: b\nversion: 1\nprovides: d\n\npackage: c\nversion: 1\ninstalled: true\n\n\
                package: c\nversion: 4\ninstalled: true\n\npackage: e\nversion: 1\nrecommends: false!\n";
    let (u, _) = problem(text);
    for m in Measure::ALL {
        assert_layer_faithful(&u, m);
    }
}

#[test]
fn encoding_matches_semantics_on_generated_instances() {
    for inst in common::small_corpus(80) {
        let (u, r) = (&inst.universe, &inst.request);
        let (vm, clauses) = encode_problem(u, r);
        let n = u.len();
        for word in 0u32..1 << n {
            let member = bits(n, word);
            assert_eq!(
                extendable(clauses.clauses(), &member, vm.num_vars()),
                common::valid(u, r, &member),
                "seed {} assignment {word:b}",
                inst.seed
            );
        }
    }
}

// ------------------------------------------------------------ cardinality

fn weighted_sum(terms: &[(u64, Lit)], model: &[bool]) -> u64 {
    terms.iter().filter(|(_, l)| common::lit_true(*l, model)).map(|&(w, _)| w).sum()
}

/// Models of `cardinality_leq`, projected on the term variables, are exactly
/// the assignments within the bound.
fn assert_leq_exact(terms: &[(u64, Lit)], n: usize, bound: u64) {
    let mut vm = VarMap::with_packages(n);
    let cs = cardinality_leq(terms, bound, &mut vm);
    for word in 0u32..1 << n {
        let fixed = bits(n, word);
        let within = weighted_sum(terms, &fixed) <= bound;
        assert_eq!(extendable(cs.clauses(), &fixed, vm.num_vars()), within, "{terms:?} <= {bound} at {word:b}");
    }
}

#[test]
fn cardinality_examples() {
    let l = |v: i64| Lit::from_dimacs(v);
    let terms = vec![(1, l(1)), (1, l(2)), (1, l(3))];
    let mut vm = VarMap::with_packages(3);
    assert!(cardinality_leq(&terms, 3, &mut vm).is_empty());
    assert_eq!(
        sorted(&cardinality_leq(&terms, 0, &mut vm)),
        set(vec![vec![l(-1)], vec![l(-2)], vec![l(-3)]])
    );
    assert_leq_exact(&terms, 3, 1);
}

#[test]
fn cardinality_exhaustive_up_to_ten_literals() {
    let mut rng = SplitMix64::new(12);
    for n in 1..=10usize {
        for _ in 0..3 {
            let terms: Vec<(u64, Lit)> = (0..n)
                .map(|i| {
                    let w = 1 + rng.below(3);
                    let v = i as i64 + 1;
                    (w, Lit::from_dimacs(if rng.chance(0.3) { -v } else { v }))
                })
                .collect();
            for bound in 0..=15 {
                assert_leq_exact(&terms, n, bound);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn totalizer_outputs_count_upwards(
        weights in prop::collection::vec(1u64..4, 1..8),
        cap in 1u64..12,
        word in any::<u32>(),
    ) {
        let n = weights.len();
        let terms: Vec<(u64, Lit)> = weights.iter().enumerate().map(|(i, &w)| (w, Lit::from_dimacs(i as i64 + 1))).collect();
        let mut vm = VarMap::with_packages(n);
        let mut cs = ClauseSet::default();
        let outputs = totalizer(&terms, cap, &mut vm, &mut cs);
        let total: u64 = weights.iter().sum();
        prop_assert_eq!(outputs.len() as u64, cap.min(total));

        let fixed = bits(n, word);
        let sum = weighted_sum(&terms, &fixed);
        let mut assign: Vec<Option<bool>> = fixed.iter().map(|&b| Some(b)).collect();
        assign.resize(vm.num_vars(), None);
        prop_assert!(common::propagate(cs.clauses(), &mut assign).is_ok());
        for (k, o) in outputs.iter().enumerate() {
            if (k as u64) < sum {
                prop_assert_eq!(assign[o.var().index()], Some(!o.is_negated()));
            }
        }
        // outputs at or above the sum may all stay false
        let mut capped = cs.clauses().to_vec();
        capped.extend(outputs.iter().skip(sum as usize).map(|&o| vec![!o]));
        prop_assert!(extendable(&capped, &fixed, vm.num_vars()));
    }

    #[test]
    fn at_most_one_is_exact(n in 1usize..=12) {
        let lits: Vec<Lit> = (1..=n as i64).map(Lit::from_dimacs).collect();
        let mut vm = VarMap::with_packages(n);
        let mut cs = ClauseSet::default();
        at_most_one(&lits, &mut vm, &mut cs);
        if n < 8 {
            prop_assert_eq!(vm.num_vars(), n);
        } else {
            prop_assert!(vm.num_vars() > n);
        }
        for word in 0u32..1 << n {
            let fixed = bits(n, word);
            prop_assert_eq!(extendable(cs.clauses(), &fixed, vm.num_vars()), word.count_ones() <= 1);
        }
    }
}

#[test]
fn dimacs_dump_has_standard_header() {
    let (u, r) = problem("package: a\nversion: 1\ndepends: b\n\npackage: b\nversion: 1\n\nrequest:\ninstall: a\n");
    let (vm, clauses) = encode_problem(&u, &r);
    let text = clauses.to_dimacs(vm.num_vars());
    assert!(text.starts_with(&format!("p cnf {} {}\n", vm.num_vars(), clauses.len())));
    assert_eq!(cudfsolve::sat::dimacs::parse(&text).unwrap().clauses, clauses.clauses());
}

#[test]
fn variables_follow_sorted_ids() {
    let (u, _) = problem("package: b\nversion: 2\n\npackage: a\nversion: 3\n\npackage: b\nversion: 1\n");
    let vm = VarMap::new(&u);
    let order: Vec<String> = (0..3).map(|i| vm.id_of(Var(i)).unwrap().to_string()).collect();
    assert_eq!(order, ["a v3", "b v1", "b v2"]);
}
