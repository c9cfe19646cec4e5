//! IDX reading and tri-level patch features for the vendored 6/9 digits.

use ising_learn::data::{data_dir, mnist_paths, preprocess_image, read_idx_images, read_idx_labels, MnistConfig};

fn main() {
    let (img_path, lbl_path) = mnist_paths(&data_dir()).expect("vendored IDX files");
    let images = read_idx_images(&img_path).unwrap();
    let labels = read_idx_labels(&lbl_path).unwrap();
    let cfg = MnistConfig::default();
    println!("{} images of {}x{}; {}", images.pixels.len(), images.rows, images.cols, cfg.describe());
    for k in 0..4 {
        let px = &images.pixels[k];
        for r in (0..images.rows).step_by(2) {
            let line: String = (0..images.cols).step_by(2).map(|c| if px[r * images.cols + c] > 127 { '#' } else { '.' }).collect();
            println!("  {line}");
        }
        let feats = preprocess_image(px, images.rows, images.cols, &cfg, k).unwrap();
        println!("digit {} -> {:?}", labels[k], feats);
    }
}
