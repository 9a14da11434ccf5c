use super::{agreement, Span};

/// A tweet with its spans marked: `[match]`, `{gold only}` and `<predicted only>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rendered {
    pub text: String,
    pub html: String,
}

const CSS: &str = ".match{background:#9cc3f5}.gold{background:#f7e37c}.pred{background:#f29b9b}\
.gold.pred{background:linear-gradient(#f7e37c 50%,#f29b9b 50%)}";

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

pub fn render_agreement(tokens: &[String], pred: &[Span], gold: &[Span]) -> Rendered {
    let a = agreement("", pred, gold);
    let n = tokens.len();
    let in_any = |spans: &[Span], t: usize| spans.iter().any(|&(s, e)| s <= t && t < e);

    // markers are distinct per class, so crossing gold-only and predicted-only
    // spans stay readable without nesting
    let classes: [(&[Span], char, char); 3] = [(&a.matched, '[', ']'), (&a.missed, '{', '}'), (&a.spurious, '<', '>')];
    let mut text = String::new();
    for (t, tok) in tokens.iter().enumerate() {
        if t > 0 {
            text.push(' ');
        }
        for (spans, open, _) in classes {
            for _ in spans.iter().filter(|&&(s, _)| s == t) {
                text.push(open);
            }
        }
        text.push_str(tok);
        for (spans, _, close) in classes.iter().rev() {
            for _ in spans.iter().filter(|&&(_, e)| e == t + 1) {
                text.push(*close);
            }
        }
    }

    let mut html = format!("<style>{CSS}</style><p>");
    for t in 0..n {
        if t > 0 {
            html.push(' ');
        }
        let mut cls = Vec::new();
        if in_any(&a.matched, t) {
            cls.push("match");
        } else {
            if in_any(&a.missed, t) {
                cls.push("gold");
            }
            if in_any(&a.spurious, t) {
                cls.push("pred");
            }
        }
        if cls.is_empty() {
            html.push_str(&escape(&tokens[t]));
        } else {
            html.push_str(&format!("<span class=\"{}\">{}</span>", cls.join(" "), escape(&tokens[t])));
        }
    }
    html.push_str("</p>");
    Rendered { text, html }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split(' ').map(str::to_string).collect()
    }

    #[test]
    fn full_agreement() {
        let t = toks("need help in Houston");
        let r = render_agreement(&t, &[(0, 2), (3, 4)], &[(0, 2), (3, 4)]);
        assert_eq!(r.text, "[need help] in [Houston]");
        assert!(!r.html.contains("class=\"gold") && !r.html.contains("class=\"pred"));
    }

    #[test]
    fn gold_without_prediction() {
        let t = toks("roads flooded downtown");
        let r = render_agreement(&t, &[], &[(1, 2)]);
        assert_eq!(r.text, "roads {flooded} downtown");
        assert!(r.html.contains("<span class=\"gold\">flooded</span>"));
    }

    #[test]
    fn mixed_agreement_row() {
        // "as of now" is a gold span the prediction missed
        let t = toks("pls help : People in Hermosa , Bataan r in roofs now , there's no rescuers helping as of now #rescuePH");
        let gold = [(0, 4), (15, 16), (16, 17), (17, 20), (20, 21)];
        let pred = [(0, 4), (7, 8), (15, 16), (16, 17), (20, 21)];
        let r = render_agreement(&t, &pred, &gold);
        assert_eq!(
            r.text,
            "[pls help : People] in Hermosa , <Bataan> r in roofs now , there's no [rescuers] [helping] {as of now} [#rescuePH]"
        );
        assert!(r.html.contains("<span class=\"pred\">Bataan</span>"));
        assert!(r.html.contains("<span class=\"gold\">as</span>"));
    }

    #[test]
    fn crossing_spans_and_escaping() {
        let t = toks("a <b> c d");
        let r = render_agreement(&t, &[(1, 3)], &[(0, 2)]);
        assert_eq!(r.text, "{a <<b>} c> d");
        assert!(r.html.contains("<span class=\"gold pred\">&lt;b&gt;</span>"));
    }
}
