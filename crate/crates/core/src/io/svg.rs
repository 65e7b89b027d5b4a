use std::fmt::Write as _;
use std::path::Path;

use super::write_text;
use crate::error::{Error, Result};
use crate::fire::DailyPerimeter;
use crate::geometry::{Point, Polygon};
use crate::grid::{AnalysisGrid, RealRaster};
use crate::impact::District;

/// Population choropleth ramp, lowest to highest quantile class.
pub const POPULATION_RAMP: [&str; 5] = ["#ffffcc", "#a1dab4", "#41b6c4", "#2c7fb8", "#253494"];

const DAY_COLORS: [&str; 8] = [
    "#d7191c", "#fdae61", "#7b3294", "#e66101", "#008837", "#c51b7d", "#4d4d4d", "#b2182b",
];

#[derive(Debug, Clone, Copy, Default)]
pub struct RenderLayers<'a> {
    pub population: Option<&'a RealRaster>,
    pub perimeters: Option<&'a [DailyPerimeter]>,
    pub districts: Option<&'a [District]>,
}

fn num(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_string() } else { s.to_string() }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Upper bounds of the first four quantile classes over positive values.
fn quantile_breaks(r: &RealRaster) -> Option<[f64; 4]> {
    let mut v: Vec<f64> = r.cells.iter().copied().filter(|&x| x > 0.0).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let q = |p: f64| v[((p * v.len() as f64).ceil() as usize).saturating_sub(1).min(v.len() - 1)];
    Some([q(0.2), q(0.4), q(0.6), q(0.8)])
}

struct Canvas {
    grid: AnalysisGrid,
    out: String,
}

impl Canvas {
    fn pt(&self, p: Point) -> (String, String) {
        (num(p.x - self.grid.origin_x), num(self.grid.top() - p.y))
    }

    fn path(&mut self, polys: &[Polygon], attrs: &str) {
        let mut d = String::new();
        for poly in polys {
            for ring in poly.rings() {
                for (i, &p) in ring[..ring.len() - 1].iter().enumerate() {
                    let (x, y) = self.pt(p);
                    write!(d, "{}{x} {y} ", if i == 0 { "M" } else { "L" }).unwrap();
                }
                d.push_str("Z ");
            }
        }
        if !d.is_empty() {
            writeln!(self.out, "<path d=\"{}\" {attrs}/>", d.trim_end()).unwrap();
        }
    }
}

/// Deterministic SVG map in planar meters, north up.
pub fn render_svg(grid: &AnalysisGrid, layers: &RenderLayers<'_>) -> Result<String> {
    if layers.population.is_none() && layers.perimeters.is_none() && layers.districts.is_none() {
        return Err(Error::EmptyInput("render needs at least one layer"));
    }
    let w = grid.n_cols as f64 * grid.cell_size;
    let h = grid.n_rows as f64 * grid.cell_size;
    let fs = (w.max(h) / 40.0).max(1.0);
    let days = layers.perimeters.unwrap_or(&[]);
    let legend_rows = days.len() + if layers.population.is_some() { 6 } else { 0 } + 1;
    let legend_h = fs * 1.5 * legend_rows as f64;
    let mut c = Canvas {
        grid: *grid,
        out: String::new(),
    };
    writeln!(
        c.out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {} {}\" font-family=\"sans-serif\" font-size=\"{}\">",
        num(w),
        num(h + legend_h),
        num(fs)
    )
    .unwrap();
    writeln!(c.out, "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#ffffff\" stroke=\"#000000\"/>", num(w), num(h)).unwrap();

    let breaks = layers.population.map(|p| {
        grid.ensure_aligned(&p.grid).map(|_| quantile_breaks(p))
    }).transpose()?.flatten();
    if let (Some(pop), Some(b)) = (layers.population, breaks) {
        c.out.push_str("<g id=\"population\" stroke=\"none\">\n");
        let class = |v: f64| -> Option<usize> { (v > 0.0).then(|| b.iter().filter(|&&x| v > x).count()) };
        for row in 0..grid.n_rows {
            let mut col = 0;
            while col < grid.n_cols {
                let k = class(pop.get(row, col));
                let start = col;
                while col < grid.n_cols && class(pop.get(row, col)) == k {
                    col += 1;
                }
                if let Some(k) = k {
                    writeln!(
                        c.out,
                        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>",
                        num(start as f64 * grid.cell_size),
                        num(row as f64 * grid.cell_size),
                        num((col - start) as f64 * grid.cell_size),
                        num(grid.cell_size),
                        POPULATION_RAMP[k]
                    )
                    .unwrap();
                }
            }
        }
        c.out.push_str("</g>\n");
    }

    if let Some(ds) = layers.districts {
        c.out.push_str("<g id=\"districts\" fill=\"none\" stroke=\"#000000\" stroke-dasharray=\"4 2\">\n");
        for d in ds {
            c.path(&d.perimeter, &format!("data-name=\"{}\"", escape(&d.name)));
        }
        c.out.push_str("</g>\n");
    }

    c.out.push_str("<g id=\"perimeters\" fill=\"none\">\n");
    for (i, day) in days.iter().enumerate() {
        let color = DAY_COLORS[i % DAY_COLORS.len()];
        c.path(&day.polygons, &format!("stroke=\"{color}\" data-date=\"{}\"", day.date));
    }
    c.out.push_str("</g>\n");

    c.out.push_str("<g id=\"legend\">\n");
    let mut y = h + fs * 1.5;
    if layers.population.is_some() {
        writeln!(c.out, "<text x=\"{}\" y=\"{}\">persons per cell</text>", num(fs * 0.5), num(y)).unwrap();
        y += fs * 1.5;
        match breaks {
            Some(b) => {
                let bounds = [0.0, b[0], b[1], b[2], b[3]];
                for (k, color) in POPULATION_RAMP.iter().enumerate() {
                    let label = if k < 4 {
                        format!("{} to {}", num(bounds[k]), num(b[k]))
                    } else {
                        format!("above {}", num(b[3]))
                    };
                    legend_entry(&mut c.out, &mut y, fs, color, false, label);
                }
            }
            None => {
                for color in POPULATION_RAMP {
                    legend_entry(&mut c.out, &mut y, fs, color, false, "no population".into());
                }
            }
        }
    }
    for (i, day) in days.iter().enumerate() {
        legend_entry(&mut c.out, &mut y, fs, DAY_COLORS[i % DAY_COLORS.len()], true, format!("{} new burn", day.date));
    }
    c.out.push_str("</g>\n</svg>\n");
    Ok(c.out)
}

fn legend_entry(out: &mut String, y: &mut f64, fs: f64, color: &str, stroke: bool, label: String) {
    let style = if stroke {
        format!("fill=\"none\" stroke=\"{color}\"")
    } else {
        format!("fill=\"{color}\"")
    };
    writeln!(out, "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" {style}/>", num(fs * 0.5), num(*y - fs), num(fs), num(fs)).unwrap();
    writeln!(out, "<text x=\"{}\" y=\"{}\">{}</text>", num(fs * 2.0), num(*y), escape(&label)).unwrap();
    *y += fs * 1.5;
}

pub fn write_svg(path: &Path, grid: &AnalysisGrid, layers: &RenderLayers<'_>) -> Result<()> {
    write_text(path, &render_svg(grid, layers)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Mask;
    use chrono::NaiveDate;

    fn day(g: AnalysisGrid, cells: &[usize]) -> DailyPerimeter {
        let m = Mask::from_indices(g, cells.iter().copied());
        DailyPerimeter {
            date: NaiveDate::from_ymd_opt(2025, 1, 7).unwrap(),
            active: m.clone(),
            cumulative: m.clone(),
            polygons: crate::geometry::trace_mask_boundary(&m),
            new_burn: m,
        }
    }

    #[test]
    fn empty_masks_give_legend_only() {
        let g = AnalysisGrid::new(0.0, 0.0, 20.0, 3, 3).unwrap();
        let days = [day(g, &[])];
        let svg = render_svg(&g, &RenderLayers { perimeters: Some(&days), ..Default::default() }).unwrap();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(!svg.contains("<path"));
        assert!(svg.contains("2025-01-07 new burn"));
        assert!(render_svg(&g, &RenderLayers::default()).is_err());
    }

    #[test]
    fn single_cell_is_one_square_path() {
        let g = AnalysisGrid::new(0.0, 0.0, 20.0, 3, 3).unwrap();
        let days = [day(g, &[4])];
        let svg = render_svg(&g, &RenderLayers { perimeters: Some(&days), ..Default::default() }).unwrap();
        assert_eq!(svg.matches("<path").count(), 1);
        let d = svg.split(" d=\"").nth(1).unwrap().split('"').next().unwrap();
        let pts: Vec<&str> = d.split(['M', 'L', 'Z']).map(str::trim).filter(|s| !s.is_empty()).collect();
        assert_eq!(pts.len(), 4);
        for p in ["20 20", "40 20", "40 40", "20 40"] {
            assert!(pts.contains(&p), "{d}");
        }
    }

    #[test]
    fn choropleth_merges_runs() {
        let g = AnalysisGrid::new(0.0, 0.0, 20.0, 1, 4).unwrap();
        let pop = RealRaster::new(g, vec![5.0, 5.0, 0.0, 9.0]).unwrap();
        let a = render_svg(&g, &RenderLayers { population: Some(&pop), ..Default::default() }).unwrap();
        let b = render_svg(&g, &RenderLayers { population: Some(&pop), ..Default::default() }).unwrap();
        assert_eq!(a, b);
        let g_pop = a.split("<g id=\"population\"").nth(1).unwrap().split("</g>").next().unwrap();
        assert_eq!(g_pop.matches("<rect").count(), 2);
        assert!(g_pop.contains("width=\"40\""));
    }
}
