mod common;

use chrono::NaiveDate;
use proptest::prelude::*;

use infoflow::arborescence::{
    degrees, enumerate_arborescences, max_spanning_arborescence, maximal_information_flow_path,
    Orientation,
};
use infoflow::entropy::{dai_matrix, te_matrix, transfer_entropy};
use infoflow::network::{build_network, Edge, InfoFlowNetwork};
use infoflow::symbolize::{symbolize, SymbolSeries};
use infoflow::synth::business_days;
use infoflow::timeseries::{log_returns, PriceSeries, ReturnSeries, SectorMeta};

use common::*;

fn symbol_pair(max_q: usize, max_len: usize) -> impl Strategy<Value = (usize, Vec<u16>, Vec<u16>)> {
    (2..=max_q, 2..=max_len).prop_flat_map(|(q, len)| {
        let s = prop::collection::vec(1..=q as u16, len);
        (Just(q), s.clone(), s)
    })
}

fn network(max_n: usize) -> impl Strategy<Value = InfoFlowNetwork> {
    (2..=max_n).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        (
            Just(n),
            prop::collection::vec(any::<bool>(), pairs),
            prop::collection::vec(1u32..1_000_000, pairs),
        )
            .prop_map(|(n, dirs, ws)| {
                let mut k = 0;
                let mut edges = Vec::new();
                for i in 0..n {
                    for j in i + 1..n {
                        let w = ws[k] as f64;
                        edges.push(if dirs[k] { Edge::new(i, j, w) } else { Edge::new(j, i, w) });
                        k += 1;
                    }
                }
                InfoFlowNetwork::from_edges(sectors(n), edges).unwrap()
            })
    })
}

proptest! {
    #[test]
    fn te_bounded_and_matches_bruteforce((q, x, y) in symbol_pair(4, 30)) {
        let sx = SymbolSeries::from_symbols(SectorMeta::new("801010", "x"), q, x.clone()).unwrap();
        let sy = SymbolSeries::from_symbols(SectorMeta::new("801020", "y"), q, y.clone()).unwrap();
        let te = transfer_entropy(&sy, &sx).unwrap();
        prop_assert!(te >= 0.0);
        prop_assert!(te <= (q as f64).log2() + 1e-12);
        prop_assert!((te - te_bruteforce(&x, &y).max(0.0)).abs() < 1e-12);
    }

    #[test]
    fn dai_is_antisymmetric((q, x, y) in symbol_pair(5, 60)) {
        let s = [
            SymbolSeries::from_symbols(SectorMeta::new("801010", "x"), q, x).unwrap(),
            SymbolSeries::from_symbols(SectorMeta::new("801020", "y"), q, y).unwrap(),
        ];
        let dai = dai_matrix(&te_matrix(&s).unwrap());
        prop_assert_eq!(dai.get(0, 1), -dai.get(1, 0));
        prop_assert_eq!(dai.get(0, 0), 0.0);
    }

    #[test]
    fn returns_integrate_back_to_prices(
        start in 1.0f64..10_000.0,
        steps in prop::collection::vec(-0.1f64..0.1, 1..200),
    ) {
        let mut closes = vec![start];
        for s in &steps {
            let last = *closes.last().unwrap();
            closes.push(last * s.exp());
        }
        let dates = business_days(NaiveDate::from_ymd_opt(2000, 1, 4).unwrap(), closes.len());
        let p = PriceSeries::new(SectorMeta::new("801010", "a"), dates, closes.clone()).unwrap();
        let r = log_returns(&p).unwrap();
        let mut acc = closes[0];
        for (t, v) in r.values.iter().enumerate() {
            acc *= v.exp();
            prop_assert!((acc - closes[t + 1]).abs() <= 1e-9 * closes[t + 1]);
        }
    }

    #[test]
    fn symbols_stay_in_range(values in prop::collection::vec(-1.0f64..1.0, 2..100), q in 2usize..30) {
        prop_assume!(values.iter().any(|v| *v != values[0]));
        let dates = business_days(NaiveDate::from_ymd_opt(2000, 1, 4).unwrap(), values.len());
        let r = ReturnSeries::new(SectorMeta::new("801010", "a"), dates, values.clone()).unwrap();
        let s = symbolize(&r, q).unwrap();
        prop_assert!(s.symbols.iter().all(|&v| v >= 1 && v as usize <= q));
        let hi = values.iter().cloned().fold(f64::MIN, f64::max);
        let lo = values.iter().cloned().fold(f64::MAX, f64::min);
        for (v, &k) in values.iter().zip(&s.symbols) {
            if *v == hi { prop_assert_eq!(k as usize, q); }
            if *v == lo { prop_assert_eq!(k, 1); }
        }
    }

    #[test]
    fn arborescence_invariants_and_duality(g in network(9)) {
        let n = g.n();
        let out = max_spanning_arborescence(&g, Orientation::Outgoing).unwrap();
        let inc = max_spanning_arborescence(&g, Orientation::Incoming).unwrap();
        for a in [&out, &inc] {
            prop_assert_eq!(a.edges.len(), n - 1);
            a.validate().unwrap();
        }
        let d = degrees(&out);
        prop_assert_eq!(d[out.root].in_degree, 0);
        prop_assert!(d.iter().enumerate().all(|(v, x)| v == out.root || x.in_degree == 1));
        let d = degrees(&inc);
        prop_assert_eq!(d[inc.root].out_degree, 0);
        prop_assert!(d.iter().enumerate().all(|(v, x)| v == inc.root || x.out_degree == 1));

        let dual = max_spanning_arborescence(&g.reversed(), Orientation::Outgoing).unwrap().reversed();
        prop_assert_eq!(&inc, &dual);

        let path = maximal_information_flow_path(&out);
        prop_assert_eq!(path.nodes[0], out.root);
        prop_assert_eq!(path.length, path.nodes.len());
    }

    #[test]
    fn solver_matches_enumerators(g in network(6)) {
        for (o, outgoing) in [(Orientation::Outgoing, true), (Orientation::Incoming, false)] {
            let fast = max_spanning_arborescence(&g, o).unwrap();
            let slow = enumerate_arborescences(&g, o).unwrap();
            let best = best_by_edge_subsets(&g, outgoing).unwrap();
            // whole-number weights, so the sums compare exactly
            prop_assert_eq!(fast.total_weight, best.total);
            prop_assert_eq!(slow.total_weight, best.total);
            if best.unique {
                prop_assert_eq!(fast.root, best.root);
                let got: Vec<(usize, usize)> = fast.edges.iter().map(|e| (e.source, e.target)).collect();
                prop_assert_eq!(&got, &best.pairs);
            }
        }
    }

    #[test]
    fn flipping_every_dai_sign_reverses_the_network(g in network(7)) {
        let n = g.n();
        let mut rows = vec![vec![0.0; n]; n];
        for e in &g.edges {
            rows[e.source][e.target] = e.weight;
            rows[e.target][e.source] = -e.weight;
        }
        let neg: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
        let dai = infoflow::entropy::DaiMatrix(
            infoflow::entropy::SectorMatrix::from_rows(sectors(n), rows).unwrap(),
        );
        let flipped = infoflow::entropy::DaiMatrix(
            infoflow::entropy::SectorMatrix::from_rows(sectors(n), neg).unwrap(),
        );
        prop_assert_eq!(build_network(&dai).edges, g.edges.clone());
        prop_assert_eq!(build_network(&flipped).edges, g.reversed().edges);
    }
}
