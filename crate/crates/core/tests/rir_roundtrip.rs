use proptest::prelude::*;
use reapkit_core::matrix::CooMatrix;
use reapkit_core::rir::{
    compress_csc, compress_csr, decompress_to_csc, decompress_to_csr, deserialize, serialize,
};
use reapkit_core::CsrMatrix;

fn arb_matrix() -> impl Strategy<Value = CsrMatrix> {
    (1usize..48, 1usize..48).prop_flat_map(|(r, c)| {
        prop::collection::vec((0..r, 0..c, -100.0f32..100.0), 0..200).prop_map(move |e| {
            CooMatrix::from_entries(r, c, e).unwrap().to_csr()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn csr_stream_is_identity(m in arb_matrix(), cap in prop::sample::select(vec![1usize, 2, 32, 1024])) {
        let s = compress_csr(&m, cap).unwrap();
        for b in s.data_bundles() {
            prop_assert!(b.len() <= cap && !b.is_empty());
        }
        let bytes = serialize(&s);
        prop_assert_eq!(bytes.len(), s.wire_bytes());
        let back = deserialize(&bytes).unwrap();
        prop_assert!(back.bitwise_eq(&s));
        prop_assert!(decompress_to_csr(&back).unwrap().bitwise_eq(&m));
    }

    #[test]
    fn csc_stream_is_identity(m in arb_matrix(), cap in prop::sample::select(vec![1usize, 2, 32, 1024])) {
        let c = m.to_csc();
        let back = decompress_to_csc(&deserialize(&serialize(&compress_csc(&c, cap).unwrap())).unwrap()).unwrap();
        prop_assert!(back.to_csr().bitwise_eq(&m));
    }

    #[test]
    fn split_count_is_ceiling(m in arb_matrix(), cap in 1usize..40) {
        let s = compress_csr(&m, cap).unwrap();
        let expected: usize = (0..m.rows()).map(|i| m.row_nnz(i).div_ceil(cap)).sum();
        prop_assert_eq!(s.data_bundles().count(), expected);
    }
}
