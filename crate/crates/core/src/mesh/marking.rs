/// Dörfler bulk marking on squared indicators.
///
/// Cells are taken in order of descending indicator (ties by ascending id)
/// until their sum reaches `theta` times the total. The returned ids are in
/// selection order. All-zero indicators give an empty set.
pub fn dorfler_mark(indicators: &[f64], theta: f64) -> Vec<usize> {
    let total: f64 = indicators.iter().sum();
    if !(total > 0.0) {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..indicators.len()).collect();
    order.sort_by(|&a, &b| {
        indicators[b].partial_cmp(&indicators[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    let goal = theta * total;
    let mut acc = 0.0;
    let mut marked = Vec::new();
    for c in order {
        if acc >= goal {
            break;
        }
        acc += indicators[c];
        marked.push(c);
    }
    marked
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_dominant_cell() {
        assert_eq!(dorfler_mark(&[4.0, 1.0, 1.0, 1.0, 1.0], 0.3), vec![0]);
    }

    #[test]
    fn theta_near_one_marks_everything() {
        let mut m = dorfler_mark(&[1.0; 4], 0.999);
        m.sort();
        assert_eq!(m, vec![0, 1, 2, 3]);
    }

    #[test]
    fn zero_indicators() {
        assert!(dorfler_mark(&[0.0; 3], 0.05).is_empty());
        assert!(dorfler_mark(&[], 0.5).is_empty());
    }

    #[test]
    fn ties_break_by_id() {
        assert_eq!(dorfler_mark(&[1.0, 2.0, 2.0, 1.0], 0.5), vec![1, 2]);
        assert_eq!(dorfler_mark(&[1.0, 2.0, 2.0, 1.0], 0.3), vec![1]);
    }
}
