use std::collections::BTreeMap;

use fusekit_core::augmentation::{apply, plan_from_counts, ImageBuffer, PlanOptions, TransformOp};
use fusekit_core::ClassIndex;
use proptest::prelude::*;

fn buffer() -> impl Strategy<Value = ImageBuffer> {
    (1usize..=16, 1usize..=16, 1usize..=3).prop_flat_map(|(h, w, c)| {
        prop::collection::vec(any::<u8>(), h * w * c)
            .prop_map(move |px| ImageBuffer::new(h, w, c, px).unwrap())
    })
}

fn compose(ops: &[TransformOp], img: &ImageBuffer) -> ImageBuffer {
    ops.iter().fold(img.clone(), |acc, op| apply(op, &acc).unwrap())
}

fn class_map() -> impl Strategy<Value = (BTreeMap<ClassIndex, usize>, BTreeMap<ClassIndex, usize>)> {
    prop::collection::vec((1usize..60, 0usize..300), 1..4).prop_map(|v| {
        let counts = v.iter().enumerate().map(|(c, &(n, _))| (ClassIndex::new(c), n)).collect();
        let targets = v.iter().enumerate().map(|(c, &(n, extra))| (ClassIndex::new(c), n + extra)).collect();
        (counts, targets)
    })
}

proptest! {
    #[test]
    fn group_laws(img in buffer()) {
        use TransformOp::*;
        prop_assert_eq!(compose(&[Rotate90, Rotate270], &img), img.clone());
        prop_assert_eq!(compose(&[Rotate270, Rotate90], &img), img.clone());
        prop_assert_eq!(compose(&[Rotate180, Rotate180], &img), img.clone());
        prop_assert_eq!(compose(&[FlipHorizontal, FlipHorizontal], &img), img.clone());
        prop_assert_eq!(compose(&[Rotate90, Rotate90], &img), compose(&[Rotate180], &img));
        prop_assert_eq!(compose(&[Identity], &img), img);
    }

    #[test]
    fn crop_dimensions(img in buffer(), fraction in 0.5f64..=1.0, seed in any::<u64>()) {
        let h = (fraction * img.height() as f64).floor() as usize;
        let w = (fraction * img.width() as f64).floor() as usize;
        let out = apply(&TransformOp::RandomCrop { fraction, seed }, &img);
        if h == 0 || w == 0 {
            prop_assert!(out.is_err());
        } else {
            let out = out.unwrap();
            prop_assert_eq!((out.height(), out.width()), (h, w));
            prop_assert_eq!(out.channels(), img.channels());
        }
    }

    #[test]
    fn totals_exact_and_fair((counts, targets) in class_map(), seed in any::<u64>()) {
        let plan = plan_from_counts(&counts, &targets, seed, PlanOptions::default()).unwrap();
        prop_assert_eq!(&plan.totals, &targets);
        for (&class, &n) in &counts {
            let sizes: Vec<usize> = plan.entries.iter().filter(|e| e.class == class).map(|e| e.ops.len()).collect();
            prop_assert_eq!(sizes.len(), n);
            let lo = *sizes.iter().min().unwrap();
            let hi = *sizes.iter().max().unwrap();
            prop_assert!(hi - lo <= 1);
        }
    }

    #[test]
    fn plan_deterministic((counts, targets) in class_map(), seed in any::<u64>()) {
        let a = plan_from_counts(&counts, &targets, seed, PlanOptions::default()).unwrap();
        let b = plan_from_counts(&counts, &targets, seed, PlanOptions::default()).unwrap();
        prop_assert_eq!(a, b);
    }
}
