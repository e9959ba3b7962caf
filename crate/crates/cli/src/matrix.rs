use nalgebra::{DMatrix, DVector};

/// Row-major text, rows separated by `;`, entries by `,` or whitespace.
pub fn parse_matrix(text: &str) -> std::result::Result<DMatrix<f64>, String> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, row) in text.split(';').enumerate() {
        let entries: Vec<&str> = row
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        if entries.is_empty() {
            if text.trim_end().ends_with(';') && i > 0 {
                continue;
            }
            return Err(format!("row {} is empty", i + 1));
        }
        let parsed = entries
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| format!("`{s}` is not a number")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if let Some(first) = rows.first() {
            if first.len() != parsed.len() {
                return Err(format!(
                    "row {} has {} entries, expected {}",
                    i + 1,
                    parsed.len(),
                    first.len()
                ));
            }
        }
        rows.push(parsed);
    }
    let ncols = rows[0].len();
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn format_matrix(m: &DMatrix<f64>) -> String {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| format!("{:.16e}", m[(i, j)]))
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join(";")
}

pub fn column(values: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(values)
}
