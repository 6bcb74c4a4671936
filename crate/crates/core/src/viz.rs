//! Receptive-field heatmaps and their similarity to class-mean images.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mnist::{LabeledImage, COLS, N_CLASSES, PIXELS, ROWS};
use crate::network::{Network, NeuronId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeatmapLayout {
    /// Upscaling factor per weight.
    pub scale: usize,
    /// White separator between cells, in output pixels.
    pub gap: usize,
}

impl Default for HeatmapLayout {
    fn default() -> Self {
        Self { scale: 4, gap: 2 }
    }
}

/// Diverging palette: -1 is saturated blue, 0 white, +1 saturated red.
pub fn diverging_color(v: f64) -> [u8; 3] {
    let v = v.clamp(-1.0, 1.0);
    let fade = |x: f64| (255.0 * (1.0 - x)).round() as u8;
    if v >= 0.0 {
        [255, fade(v), fade(v)]
    } else {
        [fade(-v), fade(-v), 255]
    }
}

/// An RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub rgb: Vec<u8>,
}

impl Raster {
    fn white(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            rgb: vec![255; width * height * 3],
        }
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }

    /// Binary portable pixmap (P6).
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.rgb);
        out
    }
}

/// One row per column (class), one cell per neuron, colors normalized by the
/// largest absolute weight in the whole network.
pub fn heatmap_raster(net: &Network, layout: HeatmapLayout) -> Raster {
    let cfg = net.config();
    let (cell_w, cell_h) = (COLS * layout.scale, ROWS * layout.scale);
    let width = cfg.n_micro * cell_w + (cfg.n_micro - 1) * layout.gap;
    let height = cfg.n_columns * cell_h + (cfg.n_columns - 1) * layout.gap;
    let mut img = Raster::white(width, height);

    let max_abs = net
        .ids()
        .flat_map(|id| net.synapses(id).weights().iter().map(|w| w.abs()))
        .fold(0.0f64, f64::max);
    if max_abs == 0.0 {
        return img;
    }
    for id in net.ids() {
        let x0 = id.micro * (cell_w + layout.gap);
        let y0 = id.column * (cell_h + layout.gap);
        for (p, &w) in net.synapses(id).weights().iter().take(PIXELS).enumerate() {
            let color = diverging_color(w / max_abs);
            let (py, px) = (p / COLS, p % COLS);
            for dy in 0..layout.scale {
                for dx in 0..layout.scale {
                    let x = x0 + px * layout.scale + dx;
                    let y = y0 + py * layout.scale + dy;
                    let i = 3 * (y * width + x);
                    img.rgb[i..i + 3].copy_from_slice(&color);
                }
            }
        }
    }
    img
}

/// Writes the heatmap grid to `path` (PPM) and a layout manifest next to it
/// (`<path>.txt`).
pub fn render_heatmaps(net: &Network, path: impl AsRef<Path>, layout: HeatmapLayout) -> Result<()> {
    let path = path.as_ref();
    let raster = heatmap_raster(net, layout);
    std::fs::write(path, raster.to_ppm()).map_err(|e| Error::io(path, e))?;

    let cfg = net.config();
    let max_abs = net
        .ids()
        .flat_map(|id| net.synapses(id).weights().iter().map(|w| w.abs()))
        .fold(0.0f64, f64::max);
    let mut manifest = String::new();
    let _ = writeln!(manifest, "image = {}", path.display());
    let _ = writeln!(manifest, "size = {}x{}", raster.width, raster.height);
    let _ = writeln!(
        manifest,
        "rows = {} (column / class 0..{})",
        cfg.n_columns,
        cfg.n_columns - 1
    );
    let _ = writeln!(manifest, "cols = {} (neuron within column)", cfg.n_micro);
    let _ = writeln!(
        manifest,
        "cell = {ROWS}x{COLS} weights, scale {}, gap {}",
        layout.scale, layout.gap
    );
    let _ = writeln!(
        manifest,
        "palette = blue (-{max_abs:e}) .. white (0) .. red (+{max_abs:e})"
    );
    let mut txt = path.as_os_str().to_owned();
    txt.push(".txt");
    std::fs::write(&txt, manifest).map_err(|e| Error::io(txt, e))
}

/// Mean pixel intensity per class.
pub fn class_mean_images(images: &[LabeledImage]) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; PIXELS]; N_CLASSES];
    let mut counts = [0usize; N_CLASSES];
    for img in images {
        counts[img.label()] += 1;
        for (s, &p) in sums[img.label()].iter_mut().zip(img.pixels()) {
            *s += p as f64;
        }
    }
    for (s, &n) in sums.iter_mut().zip(&counts) {
        if n > 0 {
            s.iter_mut().for_each(|x| *x /= n as f64);
        }
    }
    sums
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correlation {
    pub r: f64,
    /// One of the two series was constant; `r` is then reported as 0.
    pub degenerate: bool,
}

pub fn pearson(a: &[f64], b: &[f64]) -> Correlation {
    let n = a.len().min(b.len()) as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        Correlation {
            r: 0.0,
            degenerate: true,
        }
    } else {
        Correlation {
            r: sab / (saa * sbb).sqrt(),
            degenerate: false,
        }
    }
}

/// Mean weight map over the neurons of one column.
pub fn column_mean_field(net: &Network, column: usize) -> Vec<f64> {
    let n_micro = net.config().n_micro;
    let mut mean = vec![0.0; net.config().n_inputs];
    for micro in 0..n_micro {
        for (m, w) in mean
            .iter_mut()
            .zip(net.synapses(NeuronId { column, micro }).weights())
        {
            *m += w / n_micro as f64;
        }
    }
    mean
}

/// Per class: correlation between the column's mean receptive field and the
/// class-mean image.
pub fn field_similarity(net: &Network, class_means: &[Vec<f64>]) -> Vec<Correlation> {
    class_means
        .iter()
        .enumerate()
        .take(net.config().n_columns)
        .map(|(c, mean_img)| pearson(&column_mean_field(net, c), mean_img))
        .collect()
}

/// Per column: mean pairwise correlation among its neurons' weight maps.
pub fn intra_column_similarity(net: &Network) -> Vec<f64> {
    let cfg = net.config();
    (0..cfg.n_columns)
        .map(|column| {
            let maps: Vec<&[f64]> = (0..cfg.n_micro)
                .map(|micro| net.synapses(NeuronId { column, micro }).weights())
                .collect();
            let mut total = 0.0;
            let mut pairs = 0;
            for i in 0..maps.len() {
                for j in i + 1..maps.len() {
                    total += pearson(maps[i], maps[j]).r;
                    pairs += 1;
                }
            }
            if pairs == 0 {
                0.0
            } else {
                total / pairs as f64
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{InitMode, NetworkConfig};
    use crate::resource::{ResourceFunctionConfig, ResourceKind};

    fn zero_net() -> Network {
        Network::new(NetworkConfig {
            init_mode: InitMode::Zero,
            resource_fn: ResourceFunctionConfig::new(ResourceKind::Linear, -0.5, 0.5).unwrap(),
            ..NetworkConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn palette_endpoints() {
        assert_eq!(diverging_color(0.0), [255, 255, 255]);
        assert_eq!(diverging_color(1.0), [255, 0, 0]);
        assert_eq!(diverging_color(-1.0), [0, 0, 255]);
        assert_eq!(diverging_color(0.5), [255, 128, 128]);
    }

    #[test]
    fn zero_weights_render_white() {
        let r = heatmap_raster(&zero_net(), HeatmapLayout::default());
        assert!(r.rgb.iter().all(|&b| b == 255));
        assert_eq!(r.width, 15 * 28 * 4 + 14 * 2);
        assert_eq!(r.height, 10 * 28 * 4 + 9 * 2);
    }

    #[test]
    fn single_positive_synapse_is_one_red_pixel() {
        let mut net = zero_net();
        let id = NeuronId {
            column: 3,
            micro: 11,
        };
        net.set_resource(id, 5 * 28 + 9, 0.5);
        let r = heatmap_raster(&net, HeatmapLayout { scale: 1, gap: 0 });
        let (x, y) = (11 * 28 + 9, 3 * 28 + 5);
        for yy in 0..r.height {
            for xx in 0..r.width {
                let expected = if (xx, yy) == (x, y) {
                    [255, 0, 0]
                } else {
                    [255, 255, 255]
                };
                assert_eq!(r.pixel(xx, yy), expected);
            }
        }
    }

    #[test]
    fn ppm_header_and_determinism() {
        let mut net = zero_net();
        net.set_resource(
            NeuronId {
                column: 0,
                micro: 0,
            },
            0,
            -0.25,
        );
        let a = heatmap_raster(&net, HeatmapLayout::default()).to_ppm();
        let b = heatmap_raster(&net, HeatmapLayout::default()).to_ppm();
        assert_eq!(a, b);
        assert!(a.starts_with(b"P6\n1708 1138\n255\n"));
        let body = &a[a.len() - 1708 * 1138 * 3..];
        assert_eq!(&body[..3], &[0, 0, 255]);
    }

    #[test]
    fn proportional_field_correlates_perfectly() {
        let mut net = zero_net();
        let target: Vec<f64> = (0..PIXELS).map(|i| ((i * 31) % 97) as f64).collect();
        for micro in 0..15 {
            for (p, &v) in target.iter().enumerate() {
                net.set_resource(NeuronId { column: 2, micro }, p, v / 400.0);
            }
        }
        let mut means = vec![vec![0.0; PIXELS]; 10];
        means[2] = target;
        let sim = field_similarity(&net, &means);
        assert!((sim[2].r - 1.0).abs() < 1e-12);
        assert!(sim[0].degenerate && sim[0].r == 0.0);
        let intra = intra_column_similarity(&net);
        assert!((intra[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_reference_values() {
        let c = pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 7.0]);
        // centered sums: sab = 5, saa = 2, sbb = 38/3
        assert!((c.r - 5.0 / (2.0f64 * (38.0 / 3.0)).sqrt()).abs() < 1e-12);
        assert_eq!(pearson(&[1.0, -1.0], &[-3.0, 3.0]).r, -1.0);
    }

    #[test]
    fn unwritable_path() {
        let err = render_heatmaps(
            &zero_net(),
            "/nonexistent/heat.ppm",
            HeatmapLayout::default(),
        );
        assert!(matches!(err, Err(Error::Io { .. })));
    }
}
