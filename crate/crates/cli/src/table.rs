//! Plain-text comparison tables.

/// One table row: strategy and either metrics or an error message.
pub struct Row {
    pub strategy: String,
    pub metrics: Result<[f64; 3], String>,
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.3}")
    } else {
        "-".to_string()
    }
}

/// Strategy column left-aligned, numbers right-aligned to 3 decimals.
pub fn render(rows: &[Row]) -> String {
    let header = ["Strategy", "RMSECV", "R2", "Closeness%"];
    let cells: Vec<[String; 4]> = rows
        .iter()
        .map(|r| match &r.metrics {
            Ok([rmse, r2, close]) => [r.strategy.clone(), num(*rmse), num(*r2), num(*close)],
            Err(e) => [r.strategy.clone(), format!("error: {e}"), String::new(), String::new()],
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let line = |cols: [&str; 4], out: &mut String| {
        let text = format!(
            "{:<w0$}  {:>w1$}  {:>w2$}  {:>w3$}",
            cols[0],
            cols[1],
            cols[2],
            cols[3],
            w0 = widths[0],
            w1 = widths[1],
            w2 = widths[2],
            w3 = widths[3]
        );
        out.push_str(text.trim_end());
        out.push('\n');
    };
    line(header, &mut out);
    let rule = widths.iter().sum::<usize>() + 6;
    out.push_str(&"-".repeat(rule));
    out.push('\n');
    for row in &cells {
        line([&row[0], &row[1], &row[2], &row[3]], &mut out);
    }
    out
}
