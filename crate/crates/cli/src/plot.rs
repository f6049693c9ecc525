//! Deterministic gnuplot script emission for the eigenvalue scatter plots.

use num_complex::Complex64;

/// One scatter panel: an eigenvalue CSV plus the predicted limit points,
/// drawn as crosses.
pub struct Panel {
    pub csv: String,
    pub title: String,
    pub predicted: [Complex64; 2],
}

/// A multi-panel gnuplot script. Axes autoscale, but the predicted points
/// are part of the plotted data so they are always in frame.
pub fn plot_script(output_png: &str, panels: &[Panel]) -> String {
    let mut s = String::new();
    s.push_str("# generated eigenvalue scatter script\n");
    s.push_str(&format!("set terminal pngcairo size {},480\n", 480 * panels.len()));
    s.push_str(&format!("set output '{output_png}'\n"));
    s.push_str("set datafile separator ','\n");
    s.push_str("set key off\n");
    s.push_str("set xlabel 'Re'\nset ylabel 'Im'\n");
    if panels.len() > 1 {
        s.push_str(&format!("set multiplot layout 1,{}\n", panels.len()));
    }
    for p in panels {
        s.push_str(&format!("set title '{}'\n", p.title));
        s.push_str(&format!(
            "plot '{}' skip 1 using 1:2 with points pt 7 ps 0.4 lc rgb '#3050c0', \\\n     \
             '-' using 1:2 with points pt 2 ps 2 lw 2 lc rgb '#c03030'\n",
            p.csv
        ));
        for e in p.predicted {
            s.push_str(&format!("{},{}\n", e.re, e.im));
        }
        s.push_str("e\n");
    }
    if panels.len() > 1 {
        s.push_str("unset multiplot\n");
    }
    s
}
