//! Boosted Haar cascades in the legacy OpenCV XML layout.
//!
//! Only upright features and single-split trees (stumps) are accepted; this
//! covers the classic `haarcascade_mcs_nose.xml` family.

use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Rect;

/// One weighted rectangle of a Haar-like feature, in base-window coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedRect {
    pub rect: Rect,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HaarFeature {
    pub rects: Vec<WeightedRect>,
}

/// A decision stump over one feature.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakClassifier {
    pub feature: HaarFeature,
    pub threshold: f64,
    /// Vote when the normalized feature value is below `threshold`.
    pub left_val: f64,
    pub right_val: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub threshold: f64,
    pub classifiers: Vec<WeakClassifier>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeModel {
    window: (usize, usize),
    stages: Vec<Stage>,
}

impl CascadeModel {
    /// Validates that every rectangle fits the base window and that no stage
    /// list or stage is empty.
    pub fn new(window: (usize, usize), stages: Vec<Stage>) -> Result<Self> {
        let (ww, wh) = window;
        if ww == 0 || wh == 0 {
            return Err(Error::InvalidCascade(format!(
                "window size {ww}x{wh} must be positive"
            )));
        }
        if stages.is_empty() {
            return Err(Error::InvalidCascade("cascade has no stages".into()));
        }
        for (si, stage) in stages.iter().enumerate() {
            if stage.classifiers.is_empty() {
                return Err(Error::InvalidCascade(format!(
                    "stage {si} has no weak classifiers"
                )));
            }
            for (ci, c) in stage.classifiers.iter().enumerate() {
                if c.feature.rects.is_empty() {
                    return Err(Error::InvalidCascade(format!(
                        "stage {si} classifier {ci} has an empty feature"
                    )));
                }
                for wr in &c.feature.rects {
                    if !wr.rect.fits_in(ww, wh) {
                        return Err(Error::InvalidCascade(format!(
                            "stage {si} classifier {ci}: rectangle {:?} leaves the {ww}x{wh} window",
                            wr.rect
                        )));
                    }
                }
            }
        }
        Ok(Self { window, stages })
    }

    /// Base window `(width, height)`.
    pub fn window(&self) -> (usize, usize) {
        self.window
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    /// Serializes back to the legacy XML layout.
    pub fn to_xml(&self) -> String {
        let mut s = String::from("<?xml version=\"1.0\"?>\n<opencv_storage>\n<cascade type_id=\"opencv-haar-classifier\">\n");
        s.push_str(&format!(
            "  <size>{} {}</size>\n  <stages>\n",
            self.window.0, self.window.1
        ));
        for stage in &self.stages {
            s.push_str("    <_>\n      <trees>\n");
            for c in &stage.classifiers {
                s.push_str(
                    "        <_>\n          <_>\n            <feature>\n              <rects>\n",
                );
                for wr in &c.feature.rects {
                    s.push_str(&format!(
                        "                <_>{} {} {} {} {:?}</_>\n",
                        wr.rect.x0, wr.rect.y0, wr.rect.w, wr.rect.h, wr.weight
                    ));
                }
                s.push_str("              </rects>\n              <tilted>0</tilted>\n            </feature>\n");
                s.push_str(&format!(
                    "            <threshold>{:?}</threshold>\n            <left_val>{:?}</left_val>\n            <right_val>{:?}</right_val>\n",
                    c.threshold, c.left_val, c.right_val
                ));
                s.push_str("          </_>\n        </_>\n");
            }
            s.push_str(&format!(
                "      </trees>\n      <stage_threshold>{:?}</stage_threshold>\n      <parent>-1</parent>\n      <next>-1</next>\n    </_>\n",
                stage.threshold
            ));
        }
        s.push_str("  </stages>\n</cascade>\n</opencv_storage>\n");
        s
    }
}

/// Reads a cascade file from disk.
pub fn load_cascade(path: impl AsRef<Path>) -> Result<CascadeModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_cascade(&text)
}

type Node<'a, 'i> = roxmltree::Node<'a, 'i>;

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedCascade(msg.into())
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children()
        .find(|c| c.is_element() && c.tag_name().name() == name)
}

fn elements<'a, 'i>(node: Node<'a, 'i>) -> impl Iterator<Item = Node<'a, 'i>> {
    node.children().filter(|c| c.is_element())
}

fn text_of<'a>(node: Node<'a, '_>, what: &str) -> Result<&'a str> {
    node.text()
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .ok_or_else(|| malformed(format!("<{what}> is empty")))
}

fn number<T: std::str::FromStr>(tok: &str, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| malformed(format!("cannot parse {what} from {tok:?}")))
}

fn required<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Result<Node<'a, 'i>> {
    child(node, name).ok_or_else(|| malformed(format!("missing <{name}>")))
}

/// Parses the legacy OpenCV Haar cascade XML layout.
pub fn parse_cascade(xml: &str) -> Result<CascadeModel> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| malformed(format!("xml: {e}")))?;
    let root = doc.root_element();
    // <opencv_storage><name type_id="opencv-haar-classifier"> ... or the classifier element itself
    let cascade = if child(root, "size").is_some() {
        root
    } else {
        elements(root)
            .find(|n| child(*n, "size").is_some())
            .ok_or_else(|| malformed("no classifier element with a <size> child"))?
    };

    let size = text_of(required(cascade, "size")?, "size")?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| number(t, "window size"))
        .collect::<Result<_>>()?;
    let [ww, wh] = dims[..] else {
        return Err(malformed(format!(
            "<size> must hold two integers, got {size:?}"
        )));
    };

    let mut stages = Vec::new();
    for (si, stage_node) in elements(required(cascade, "stages")?).enumerate() {
        let threshold: f64 = number(
            text_of(required(stage_node, "stage_threshold")?, "stage_threshold")?,
            "stage_threshold",
        )?;
        let mut classifiers = Vec::new();
        for (ti, tree) in elements(required(stage_node, "trees")?).enumerate() {
            let nodes: Vec<_> = elements(tree).collect();
            if nodes.len() != 1 {
                return Err(malformed(format!(
                    "stage {si} tree {ti} has {} nodes; only stumps are supported",
                    nodes.len()
                )));
            }
            classifiers.push(parse_stump(nodes[0], si, ti)?);
        }
        stages.push(Stage {
            threshold,
            classifiers,
        });
    }
    CascadeModel::new((ww, wh), stages)
}

fn parse_stump(node: Node, si: usize, ti: usize) -> Result<WeakClassifier> {
    let ctx = |m: &str| malformed(format!("stage {si} tree {ti}: {m}"));
    let feature = required(node, "feature")?;
    if let Some(t) = child(feature, "tilted") {
        if text_of(t, "tilted")? != "0" {
            return Err(ctx("tilted features are not supported"));
        }
    }
    let mut rects = Vec::new();
    for r in elements(required(feature, "rects")?) {
        let txt = text_of(r, "rects/_")?;
        let toks: Vec<&str> = txt.split_whitespace().collect();
        if toks.len() != 5 {
            return Err(ctx(&format!("rectangle {txt:?} must have 5 fields")));
        }
        let coords: Vec<i64> = toks[..4]
            .iter()
            .map(|t| number::<f64>(t, "rectangle coordinate").map(|v| v as i64))
            .collect::<Result<_>>()?;
        if coords.iter().any(|&c| c < 0) {
            return Err(Error::InvalidCascade(format!(
                "stage {si} tree {ti}: negative rectangle field in {txt:?}"
            )));
        }
        rects.push(WeightedRect {
            rect: Rect::new(
                coords[0] as usize,
                coords[1] as usize,
                coords[2] as usize,
                coords[3] as usize,
            ),
            weight: number(toks[4], "rectangle weight")?,
        });
    }
    let value = |name: &str| -> Result<f64> {
        let n = child(node, name).ok_or_else(|| {
            ctx(&format!(
                "missing <{name}> (non-stump trees are not supported)"
            ))
        })?;
        number(text_of(n, name)?, name)
    };
    Ok(WeakClassifier {
        feature: HaarFeature { rects },
        threshold: value("threshold")?,
        left_val: value("left_val")?,
        right_val: value("right_val")?,
    })
}
