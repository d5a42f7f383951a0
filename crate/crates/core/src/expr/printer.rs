use super::{Expr, Literal};
use crate::value::{format_real, quote};

const ATOM: u8 = 7;

/// Renders an expression with the fewest parentheses that reparse to the
/// same tree.
pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, 0, &mut out);
    out
}

fn write_list(items: &[Expr], out: &mut String) {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(item, 0, out);
    }
}

fn write_expr(e: &Expr, min_prec: u8, out: &mut String) {
    match e {
        Expr::Binary { op, lhs, rhs } => {
            let p = op.precedence();
            let paren = p < min_prec;
            if paren {
                out.push('(');
            }
            let (lmin, rmin) = if op.is_right_assoc() {
                (p + 1, p)
            } else if op.is_comparison() {
                (p + 1, p + 1)
            } else {
                (p, p + 1)
            };
            write_expr(lhs, lmin, out);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_expr(rhs, rmin, out);
            if paren {
                out.push(')');
            }
        }
        Expr::Collection { op, source, var, body } => {
            write_expr(source, ATOM, out);
            out.push_str("->");
            out.push_str(op.name());
            out.push('(');
            if let Some(v) = var {
                out.push_str(v);
                out.push_str(" | ");
            }
            if let Some(b) = body {
                write_expr(b, 0, out);
            }
            out.push(')');
        }
        Expr::SetLit(items) => {
            out.push('{');
            write_list(items, out);
            out.push('}');
        }
        Expr::SeqLit(items) => {
            out.push_str("Sequence{");
            write_list(items, out);
            out.push('}');
        }
        Expr::Call { name, args } => {
            out.push_str(name);
            out.push('(');
            write_list(args, out);
            out.push(')');
        }
        Expr::Index { class, key } => {
            out.push_str(class);
            out.push('[');
            write_expr(key, 0, out);
            out.push(']');
        }
        Expr::Ident { path, at_pre } => {
            out.push_str(&path[0]);
            if *at_pre {
                out.push_str("@pre");
            }
            for seg in &path[1..] {
                out.push('.');
                out.push_str(seg);
            }
        }
        Expr::Nav { source, feature } => {
            write_expr(source, ATOM, out);
            out.push('.');
            out.push_str(feature);
        }
        Expr::Lit(lit) => out.push_str(&match lit {
            Literal::Str(s) => quote(s),
            Literal::Int(i) => i.to_string(),
            Literal::Real(r) => format_real(*r),
            Literal::Bool(b) => b.to_string(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    #[test]
    fn minimal_parentheses() {
        for src in [
            "{}",
            "RealFigure[f.children.name]",
            "a => b & c",
            "(a => b) => c",
            "(a or b) & c",
            "a - b - c",
            "a - (b - c)",
            "a - -3",
            "(a = b) = c",
            "(a + b)->size()",
            "E[k].children",
            "(a \\/ b).name",
            "Figure@pre.referencingElements = {}",
            "Sequence{1, 2.5, \"x\"} ^ Sequence{}",
            "E->exists(x | x.k = 1 & E->forAll(y | y = x))",
        ] {
            let e = parse_expr(src).unwrap();
            assert_eq!(print_expr(&e), src);
        }
    }

    #[test]
    fn redundant_parentheses_are_dropped() {
        let e = parse_expr("((a) & (b = c))").unwrap();
        assert_eq!(print_expr(&e), "a & b = c");
    }
}
