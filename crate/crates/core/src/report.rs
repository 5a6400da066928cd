//! Header overhead arithmetic and the overhead table.
//!
//! Two ratio conventions coexist because both appear in practice: header
//! over payload, and header over the whole packet. Each table row states
//! which convention produced its number; ratios are exact rationals and only
//! round (half up, one decimal) for display.

use num_rational::Ratio;

use crate::fivegpp::HEADER_BITS;
use crate::model::Direction;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReportError {
    #[error("header-over-payload overhead is undefined for a zero-bit payload")]
    DivisionByZero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Convention {
    HeaderOverPayload,
    HeaderOverTotal,
}

/// Exact overhead ratio of a header against a payload.
pub fn overhead(
    header_bits: u32,
    payload_bits: u32,
    convention: Convention,
) -> Result<Ratio<u64>, ReportError> {
    match convention {
        Convention::HeaderOverPayload => {
            if payload_bits == 0 {
                return Err(ReportError::DivisionByZero);
            }
            Ok(Ratio::new(header_bits as u64, payload_bits as u64))
        }
        Convention::HeaderOverTotal => Ok(Ratio::new(
            header_bits as u64,
            header_bits as u64 + payload_bits as u64,
        )),
    }
}

/// Percentage rounded half-up to one decimal, e.g. "15.6".
pub fn percent_display(ratio: Ratio<u64>) -> String {
    // ratio * 1000 = tenths of a percent; round half up.
    let tenths = (ratio * Ratio::new(2000u64, 1) + Ratio::new(1, 1)).to_integer() / 2;
    format!("{}.{}", tenths / 10, tenths % 10)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OverheadRow {
    pub attack_label: String,
    pub direction: Direction,
    pub header_bits: u32,
    pub payload_bits: u32,
    pub convention: Convention,
    pub overhead_ratio: Ratio<u64>,
    pub total_packet_bits: u32,
}

impl OverheadRow {
    fn new(label: &str, direction: Direction, payload_bits: u32, convention: Convention) -> Self {
        OverheadRow {
            attack_label: label.to_string(),
            direction,
            header_bits: HEADER_BITS,
            payload_bits,
            convention,
            overhead_ratio: overhead(HEADER_BITS, payload_bits, convention)
                .expect("positive payload"),
            total_packet_bits: HEADER_BITS + payload_bits,
        }
    }
}

/// The overhead table for the catalog attacks: key extraction with
/// subscriber, IPv4 and IPv6 exit addressing, warning abuse at both cell-id
/// widths, and the 1-bit worst case of maximal splitting.
pub fn overhead_table() -> Vec<OverheadRow> {
    use Convention::*;
    use Direction::*;
    vec![
        // Key extraction, subscriber exit: 64-bit target id + 64-bit exit id
        // forward; 128-bit key + 64-bit exit id backward.
        OverheadRow::new("A1 (SUPI exit)", Forward, 128, HeaderOverPayload),
        OverheadRow::new("A1 (SUPI exit)", Backward, 192, HeaderOverPayload),
        // IPv4 exit: 64 + 32 forward, 128 + 32 backward (whole-packet view).
        OverheadRow::new("A1 (IPv4 exit)", Forward, 96, HeaderOverPayload),
        OverheadRow::new("A1 (IPv4 exit)", Backward, 160, HeaderOverTotal),
        // IPv6 exit: 64 + 128 forward, 128 + 128 backward.
        OverheadRow::new("A1 (IPv6 exit)", Forward, 192, HeaderOverPayload),
        OverheadRow::new("A1 (IPv6 exit)", Backward, 256, HeaderOverTotal),
        // Warning abuse: only a cell identifier travels, 32 or 22 bits.
        OverheadRow::new("A3 (cell id 32)", Forward, 32, HeaderOverPayload),
        OverheadRow::new("A3 (cell id 22)", Forward, 22, HeaderOverPayload),
        // Maximal splitting leaves one payload bit per message.
        OverheadRow::new("split minimum", Forward, 1, HeaderOverPayload),
    ]
}

/// Renders the table as aligned text.
pub fn render_table(rows: &[OverheadRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<16} {:<9} {:>6} {:>8} {:>7} {:>9}  {}\n",
        "attack", "direction", "header", "payload", "packet", "overhead%", "convention"
    ));
    for row in rows {
        let convention = match row.convention {
            Convention::HeaderOverPayload => "header/payload",
            Convention::HeaderOverTotal => "header/packet",
        };
        out.push_str(&format!(
            "{:<16} {:<9} {:>6} {:>8} {:>7} {:>9}  {}\n",
            row.attack_label,
            row.direction,
            row.header_bits,
            row.payload_bits,
            row.total_packet_bits,
            percent_display(row.overhead_ratio),
            convention
        ));
    }
    out
}

/// Renders the table as CSV.
pub fn render_csv(rows: &[OverheadRow]) -> String {
    let mut out = String::from(
        "attack,direction,header_bits,payload_bits,packet_bits,overhead_percent,convention\n",
    );
    for row in rows {
        let convention = match row.convention {
            Convention::HeaderOverPayload => "header/payload",
            Convention::HeaderOverTotal => "header/packet",
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.attack_label,
            row.direction,
            row.header_bits,
            row.payload_bits,
            row.total_packet_bits,
            percent_display(row.overhead_ratio),
            convention
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pct(header: u32, payload: u32, convention: Convention) -> String {
        percent_display(overhead(header, payload, convention).unwrap())
    }

    #[test]
    fn documented_ratios_round_as_expected() {
        assert_eq!(pct(20, 128, Convention::HeaderOverPayload), "15.6");
        assert_eq!(pct(20, 192, Convention::HeaderOverPayload), "10.4");
        assert_eq!(pct(20, 1, Convention::HeaderOverPayload), "2000.0");
        assert_eq!(pct(20, 160, Convention::HeaderOverTotal), "11.1");
        assert_eq!(pct(20, 96, Convention::HeaderOverPayload), "20.8");
        assert_eq!(pct(20, 256, Convention::HeaderOverTotal), "7.2");
        assert_eq!(pct(20, 32, Convention::HeaderOverPayload), "62.5");
        assert_eq!(pct(20, 22, Convention::HeaderOverPayload), "90.9");
    }

    #[test]
    fn zero_payload_is_rejected_for_header_over_payload() {
        assert_eq!(
            overhead(20, 0, Convention::HeaderOverPayload),
            Err(ReportError::DivisionByZero)
        );
        assert!(overhead(20, 0, Convention::HeaderOverTotal).is_ok());
    }

    #[test]
    fn total_convention_is_always_smaller() {
        for payload in 1..400u32 {
            let over_payload = overhead(20, payload, Convention::HeaderOverPayload).unwrap();
            let over_total = overhead(20, payload, Convention::HeaderOverTotal).unwrap();
            assert!(over_total < over_payload, "payload {payload}");
        }
    }

    #[test]
    fn table_packets_and_max_requirement() {
        let rows = overhead_table();
        let packet = |label: &str, dir: Direction| {
            rows.iter()
                .find(|r| r.attack_label == label && r.direction == dir)
                .unwrap()
                .total_packet_bits
        };
        assert_eq!(packet("A1 (SUPI exit)", Direction::Backward), 212);
        assert_eq!(packet("A1 (IPv4 exit)", Direction::Forward), 116);
        assert_eq!(packet("A1 (IPv6 exit)", Direction::Forward), 212);
        assert_eq!(packet("A3 (cell id 32)", Direction::Forward), 52);
        assert_eq!(packet("A3 (cell id 22)", Direction::Forward), 42);
        // The largest row needs 276 bits of message space.
        assert_eq!(rows.iter().map(|r| r.total_packet_bits).max(), Some(276));
    }

    #[test]
    fn renders_are_stable_and_carry_the_key_numbers() {
        let rows = overhead_table();
        let text = render_table(&rows);
        assert!(text.contains("15.6"));
        assert!(text.contains("2000.0"));
        assert_eq!(render_table(&rows), text);
        let csv = render_csv(&rows);
        assert_eq!(csv.lines().count(), rows.len() + 1);
        assert!(csv.starts_with("attack,direction,"));
    }
}
