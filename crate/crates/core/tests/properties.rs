//! Randomized checks of the solver, the figures of merit and the netlist
//! text format.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rfnet::library::{phase_shifter_family, PHASE_SHIFTER_SWITCHES};
use rfnet::netlist::{parse, render};
use rfnet::optimize::{dominates, fast_nondominated_sort, polynomial_mutation, sbx_crossover, tournament, Individual};
use rfnet::poi::{poi_from_s, sweep_poi};
use rfnet::twoport::{
    abcd_to_s, cascade, check_reciprocity, mna_two_port, s_to_abcd, AbcdMatrix, Complex, Element, ElementKind,
    Frequency, FrequencyGrid, ReferenceImpedance, Subcircuit, SwitchState,
};

#[derive(Debug, Clone, Copy)]
enum Part {
    SeriesL(f64),
    SeriesC(f64),
    SeriesR(f64),
    ShuntL(f64),
    ShuntC(f64),
    ShuntR(f64),
}

impl Part {
    fn abcd(self, f: Frequency) -> AbcdMatrix {
        let s = f.laplace();
        match self {
            Part::SeriesL(l) => AbcdMatrix::series_impedance(s * l),
            Part::SeriesC(c) => AbcdMatrix::series_impedance(Complex::new(1.0, 0.0) / (s * c)),
            Part::SeriesR(r) => AbcdMatrix::series_impedance(Complex::new(r, 0.0)),
            Part::ShuntL(l) => AbcdMatrix::shunt_admittance(Complex::new(1.0, 0.0) / (s * l)),
            Part::ShuntC(c) => AbcdMatrix::shunt_admittance(s * c),
            Part::ShuntR(r) => AbcdMatrix::shunt_admittance(Complex::new(1.0 / r, 0.0)),
        }
    }
}

fn part(lossy: bool) -> impl Strategy<Value = Part> {
    let l = (-9.5f64..-7.5).prop_map(|e| 10f64.powf(e));
    let c = (-13.0f64..-11.0).prop_map(|e| 10f64.powf(e));
    let r = (0.0f64..3.0).prop_map(|e| 10f64.powf(e));
    let mut options = vec![
        l.clone().prop_map(Part::SeriesL).boxed(),
        c.clone().prop_map(Part::SeriesC).boxed(),
        l.prop_map(Part::ShuntL).boxed(),
        c.prop_map(Part::ShuntC).boxed(),
    ];
    if lossy {
        options.push(r.clone().prop_map(Part::SeriesR).boxed());
        options.push(r.prop_map(Part::ShuntR).boxed());
    }
    proptest::strategy::Union::new(options)
}

/// Series parts advance along `in, n1, n2, ..., out`; shunt parts hang from
/// the current node. A closing series short joins the last node to `out`.
fn ladder(parts: &[Part]) -> Subcircuit {
    let mut elements = Vec::new();
    let mut node = "in".to_string();
    let mut next = 1;
    for (i, p) in parts.iter().enumerate() {
        let name = |k: char| format!("{k}{i}");
        match *p {
            Part::SeriesL(_) | Part::SeriesC(_) | Part::SeriesR(_) => {
                let to = format!("n{next}");
                next += 1;
                elements.push(match *p {
                    Part::SeriesL(v) => Element::inductor(&name('L'), &node, &to, v),
                    Part::SeriesC(v) => Element::capacitor(&name('C'), &node, &to, v),
                    Part::SeriesR(v) => Element::resistor(&name('R'), &node, &to, v),
                    _ => unreachable!(),
                });
                node = to;
            }
            Part::ShuntL(v) => elements.push(Element::inductor(&name('L'), &node, "0", v)),
            Part::ShuntC(v) => elements.push(Element::capacitor(&name('C'), &node, "0", v)),
            Part::ShuntR(v) => elements.push(Element::resistor(&name('R'), &node, "0", v)),
        }
    }
    elements.push(Element::new("Wout", ElementKind::Short, node, "out"));
    Subcircuit::grounded(elements, "in", "out")
}

fn freq() -> impl Strategy<Value = Frequency> {
    (7.0f64..10.3).prop_map(|e| Frequency::new(10f64.powf(e)).unwrap())
}

fn z0() -> ReferenceImpedance {
    ReferenceImpedance::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rlc_ladders_are_reciprocal_and_passive(parts in prop::collection::vec(part(true), 1..7), f in freq()) {
        let s = mna_two_port(&ladder(&parts), f, z0()).unwrap();
        prop_assert!(check_reciprocity(&s, 1e-10));
        prop_assert!(s.is_passive(1e-9), "norm {}", s.spectral_norm());
    }

    #[test]
    fn mna_matches_abcd_cascade(parts in prop::collection::vec(part(true), 1..7), f in freq()) {
        let s = mna_two_port(&ladder(&parts), f, z0()).unwrap();
        let m: Vec<AbcdMatrix> = parts.iter().map(|p| p.abcd(f)).collect();
        let want = abcd_to_s(&cascade(&m), z0()).unwrap();
        prop_assert!(s.max_abs_diff(&want) < 1e-9, "{:?} vs {:?}", s, want);
    }

    #[test]
    fn abcd_round_trip(parts in prop::collection::vec(part(true), 1..7), f in freq()) {
        let s = mna_two_port(&ladder(&parts), f, z0()).unwrap();
        prop_assume!(s.s21.norm() > 1e-3);
        let back = abcd_to_s(&s_to_abcd(&s, z0()).unwrap(), z0()).unwrap();
        prop_assert!(s.max_abs_diff(&back) < 1e-9);
    }

    #[test]
    fn lossless_ladders_conserve_power(parts in prop::collection::vec(part(false), 1..7), f in freq()) {
        let s = mna_two_port(&ladder(&parts), f, z0()).unwrap();
        let p = poi_from_s(&s);
        let gt = 10f64.powf(p.transducer_gain_db / 10.0);
        prop_assert!((gt - (1.0 - s.s11.norm_sqr())).abs() < 1e-9);
        prop_assert!(gt <= 1.0 + 1e-12);
        prop_assume!(s.s21.norm() > 1e-2 && s.s11.norm() < 0.99);
        prop_assert!((p.rollett_k.unwrap() - 1.0).abs() < 1e-6);
        prop_assert!((p.stability_mu.unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn passive_ladders_have_bounded_gain(parts in prop::collection::vec(part(true), 1..7), f in freq()) {
        let s = mna_two_port(&ladder(&parts), f, z0()).unwrap();
        let p = poi_from_s(&s);
        prop_assert!(p.transducer_gain_db <= 1e-9);
        prop_assert!(p.insertion_loss_db <= 1e-9);
        prop_assert!(p.input_return_loss_db <= 1e-9 && p.output_return_loss_db <= 1e-9);
        // K cancels catastrophically once |S21| nears round-off.
        if let (Some(k), true) = (p.rollett_k, s.s21.norm() > 1e-3) {
            prop_assert!(k >= 1.0 - 1e-6, "K = {k}");
        }
    }

    #[test]
    fn mirrored_ladders_have_equal_return_losses(half in prop::collection::vec(part(true), 1..4), f in freq()) {
        let mut parts = half.clone();
        parts.extend(half.iter().rev());
        let p = poi_from_s(&mna_two_port(&ladder(&parts), f, z0()).unwrap());
        prop_assert!((p.input_return_loss_db - p.output_return_loss_db).abs() < 1e-9);
    }

    #[test]
    fn netlist_text_round_trips(
        parts in prop::collection::vec((part(true), any::<bool>(), 0usize..3), 1..8),
        title in "[a-z][a-z0-9_]{0,8}",
    ) {
        let mut text = format!(".title {title}\n.ports in out\n");
        let mut ranges = String::new();
        let mut node = "in".to_string();
        for (i, (p, fixed, tag)) in parts.iter().enumerate() {
            let (letter, v, series) = match *p {
                Part::SeriesL(v) => ('L', v, true),
                Part::SeriesC(v) => ('C', v, true),
                Part::SeriesR(v) => ('R', v, true),
                Part::ShuntL(v) => ('L', v, false),
                Part::ShuntC(v) => ('C', v, false),
                Part::ShuntR(v) => ('R', v, false),
            };
            let to = if series { format!("n{i}") } else { "0".into() };
            let name = format!("{letter}{i}");
            text += &format!("{name} {node} {to} {v:e}");
            if *tag > 0 {
                text += &format!(" @net{tag}");
            }
            if *fixed {
                text += " fixed";
            } else {
                ranges += &format!(".range {name} {:e} {:e} log\n", v / 2.0, v * 2.0);
            }
            text.push('\n');
            if series {
                node = to;
            }
        }
        text += &format!("S9 {node} out on\nS10 in out !S9\n{ranges}");
        let n = parse(&text).unwrap();
        let rendered = render(&n);
        let again = parse(&rendered).unwrap();
        prop_assert_eq!(&again, &n);
        prop_assert_eq!(render(&again), rendered);
    }
}

#[test]
fn series_inductor_loss_grows_with_frequency() {
    let c = ladder(&[Part::SeriesL(5e-9)]);
    let grid = FrequencyGrid::linear(1e8, 1.5e10, 64).unwrap();
    let sweep = sweep_poi(&c, &grid, z0()).unwrap();
    for w in sweep.points.windows(2) {
        assert!(w[1].insertion_loss_db < w[0].insertion_loss_db);
    }
}

#[test]
fn resonator_power_gain_peaks_at_dense_grid_argmax() {
    // A shunt resistor at the input competes with a series resonator for
    // the incident power, so G_P peaks where the resonator is cheapest.
    let (r, l, c) = (5.0, 10e-9, 1e-12);
    let parts = [Part::ShuntR(50.0), Part::SeriesR(r), Part::SeriesL(l), Part::SeriesC(c)];
    let grid = FrequencyGrid::linear(1e9, 2.5e9, 1501).unwrap();
    let sweep = sweep_poi(&ladder(&parts), &grid, z0()).unwrap();

    let gp = |f: &Frequency| {
        let m: Vec<AbcdMatrix> = parts.iter().map(|p| p.abcd(*f)).collect();
        let s = abcd_to_s(&cascade(&m), z0()).unwrap();
        s.s21.norm_sqr() / (1.0 - s.s11.norm_sqr())
    };
    let brute = grid.points().iter().max_by(|a, b| gp(a).total_cmp(&gp(b))).unwrap();
    assert_eq!(sweep.max_power_gain_frequency.unwrap(), *brute);

    let f0 = 1.0 / (2.0 * std::f64::consts::PI * (l * c).sqrt());
    assert!((brute.hz() - f0).abs() <= 1e6, "{} vs {f0}", brute.hz());
}

#[test]
fn bypassed_phase_shifters_are_flat_across_band() {
    let on = PHASE_SHIFTER_SWITCHES.iter().map(|s| (s.to_string(), SwitchState::On)).collect();
    let grid = FrequencyGrid::linear(1e8, 6e9, 32).unwrap();
    for n in phase_shifter_family() {
        let c = n.instantiate(&Default::default(), &on).unwrap();
        for p in sweep_poi(&c, &grid, z0()).unwrap().points {
            assert!(p.insertion_phase_deg.abs() < 1e-6, "{}: {}", n.name, p.insertion_phase_deg);
        }
    }
}

fn individual() -> impl Strategy<Value = Individual> {
    // Coarse values so ties and duplicates occur.
    (prop::collection::vec(0u8..6, 2), prop_oneof![3 => Just(0u8), 1 => 1u8..4]).prop_map(|(o, v)| Individual {
        genome: Vec::new(),
        objectives: o.into_iter().map(f64::from).collect(),
        violation: f64::from(v),
    })
}

/// Peels fronts by repeated O(n²) domination scans.
fn brute_fronts(pop: &[Individual]) -> Vec<Vec<usize>> {
    let mut left: Vec<usize> = (0..pop.len()).collect();
    let mut fronts = Vec::new();
    while !left.is_empty() {
        let front: Vec<usize> =
            left.iter().copied().filter(|&i| !left.iter().any(|&j| dominates(&pop[j], &pop[i]))).collect();
        left.retain(|i| !front.contains(i));
        fronts.push(front);
    }
    fronts
}

proptest! {
    #[test]
    fn sort_matches_brute_force(pop in prop::collection::vec(individual(), 1..50)) {
        let mut got = fast_nondominated_sort(&pop);
        for f in &mut got {
            f.sort_unstable();
        }
        prop_assert_eq!(got, brute_fronts(&pop));
    }

    #[test]
    fn tournament_prefers_dominating(pop in prop::collection::vec(individual(), 2..30), a in 0usize..30, b in 0usize..30) {
        let (a, b) = (a % pop.len(), b % pop.len());
        let mut rank = vec![0; pop.len()];
        for (r, f) in fast_nondominated_sort(&pop).iter().enumerate() {
            for &i in f {
                rank[i] = r;
            }
        }
        let crowding = vec![1.0; pop.len()];
        if dominates(&pop[a], &pop[b]) {
            prop_assert_eq!(tournament(a, b, &rank, &crowding), a);
            prop_assert_eq!(tournament(b, a, &rank, &crowding), a);
        }
    }

    #[test]
    fn operators_stay_in_unit_box(
        p1 in prop::collection::vec(0.0f64..=1.0, 1..10),
        seed in any::<u64>(),
        eta in 0.5f64..50.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p2: Vec<f64> = p1.iter().map(|_| rng.gen()).collect();
        let (c1, c2) = sbx_crossover(&p1, &p2, eta, &mut rng);
        let m = polynomial_mutation(&c1, eta, 1.0, &mut rng);
        for g in c1.iter().chain(&c2).chain(&m) {
            prop_assert!((0.0..=1.0).contains(g), "{g}");
        }
    }
}
