//! Parsing of `--events` selectors.
//!
//! Grammar, one selector per comma-separated item:
//!
//! ```text
//! connected | no-isolated | degree | a:<r>
//! subset-connected:<nodes> | subset-isolated:<nodes>
//! tree-path:<nodes> | tree-star:<nodes> | tree:<nodes>:<a>-<b>+<a>-<b>...
//! ```
//!
//! `<nodes>` is a `+`-separated list of node indices, e.g. `0+1+2`. Tree edges
//! use positions within `<nodes>`.

use anyhow::{anyhow, bail, Context, Result};
use keygraph::analysis::{NodeSet, TreeShape};
use keygraph::montecarlo::Event;

fn nodes(text: &str, n: usize) -> Result<NodeSet> {
    let members = text
        .split('+')
        .map(|s| s.trim().parse::<usize>().with_context(|| format!("bad node index {s:?}")))
        .collect::<Result<Vec<_>>>()?;
    Ok(NodeSet::new(members, n)?)
}

fn tree_edges(text: &str) -> Result<Vec<(usize, usize)>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split('+')
        .map(|e| {
            let (a, b) = e.split_once('-').ok_or_else(|| anyhow!("tree edge {e:?} is not of the form a-b"))?;
            Ok((a.trim().parse()?, b.trim().parse()?))
        })
        .collect()
}

pub fn parse_event(item: &str, n: usize) -> Result<Event> {
    let item = item.trim();
    let (head, rest) = match item.split_once(':') {
        Some((h, r)) => (h, Some(r)),
        None => (item, None),
    };
    let arg = || rest.ok_or_else(|| anyhow!("selector {head:?} needs an argument"));
    Ok(match head {
        "connected" => Event::Connected,
        "no-isolated" => Event::NoIsolated,
        "degree" => Event::DegreeStats,
        "a" => Event::AEvent(arg()?.parse().with_context(|| format!("bad r in {item:?}"))?),
        "subset-connected" => Event::SubsetConnected(nodes(arg()?, n)?),
        "subset-isolated" => Event::SubsetIsolated(nodes(arg()?, n)?),
        "tree-path" => {
            let s = nodes(arg()?, n)?;
            let t = TreeShape::path(s.len())?;
            Event::Tree(s, t)
        }
        "tree-star" => {
            let s = nodes(arg()?, n)?;
            let t = TreeShape::star(s.len())?;
            Event::Tree(s, t)
        }
        "tree" => {
            let (set, edges) = arg()?.split_once(':').ok_or_else(|| anyhow!("tree selector is tree:<nodes>:<edges>"))?;
            let s = nodes(set, n)?;
            let t = TreeShape::new(s.len(), tree_edges(edges)?)?;
            Event::Tree(s, t)
        }
        other => bail!("unknown event selector {other:?}"),
    })
}

pub fn parse_events(list: &str, n: usize) -> Result<Vec<Event>> {
    let events = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_event(s, n))
        .collect::<Result<Vec<_>>>()?;
    if events.is_empty() {
        bail!("no event selectors given");
    }
    Ok(events)
}
