use super::{Point, Vector};
use crate::{Error, Result};

/// Closed axis-aligned box in the plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Point,
    pub max: Point,
}

impl Aabb {
    pub fn new(min: Point, max: Point) -> Self {
        Aabb { min, max }
    }

    pub fn from_points(pts: &[Point]) -> Option<Self> {
        let first = pts.first()?;
        let mut b = Aabb::new(*first, *first);
        for p in &pts[1..] {
            b.min = b.min.inf(p);
            b.max = b.max.sup(p);
        }
        Some(b)
    }

    pub fn merged(&self, other: &Aabb) -> Aabb {
        Aabb::new(self.min.inf(&other.min), self.max.sup(&other.max))
    }

    pub fn intersects(&self, other: &Aabb) -> bool {
        self.min.x <= other.max.x
            && other.min.x <= self.max.x
            && self.min.y <= other.max.y
            && other.min.y <= self.max.y
    }

    pub fn contains_point(&self, p: &Point) -> bool {
        self.min.x <= p.x && p.x <= self.max.x && self.min.y <= p.y && p.y <= self.max.y
    }

    pub fn contains(&self, other: &Aabb) -> bool {
        self.contains_point(&other.min) && self.contains_point(&other.max)
    }

    pub fn center(&self) -> Point {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn diagonal(&self) -> Vector {
        self.max - self.min
    }

    /// Box grown by `margin` on every side.
    pub fn inflated(&self, margin: f64) -> Aabb {
        let m = Vector::new(margin, margin);
        Aabb::new(self.min - m, self.max + m)
    }

    fn is_finite(&self) -> bool {
        self.min.iter().chain(self.max.iter()).all(|v| v.is_finite())
    }
}

#[derive(Clone, Debug)]
enum Node {
    Leaf { bbox: Aabb, item: usize },
    Branch { bbox: Aabb, left: usize, right: usize },
}

impl Node {
    fn bbox(&self) -> &Aabb {
        match self {
            Node::Leaf { bbox, .. } | Node::Branch { bbox, .. } => bbox,
        }
    }
}

/// Static bounding volume hierarchy over a list of boxes.
///
/// Built top-down by median split along the longest axis of the box centers.
/// Queries are conservative: every stored box that touches the query is
/// reported.
#[derive(Clone, Debug)]
pub struct AabbTree {
    nodes: Vec<Node>,
    root: usize,
}

impl AabbTree {
    pub fn build(boxes: &[Aabb]) -> Result<Self> {
        if boxes.is_empty() {
            return Err(Error::Geometry("cannot build a bounding box tree from no boxes".into()));
        }
        if let Some(i) = boxes.iter().position(|b| !b.is_finite()) {
            return Err(Error::Geometry(format!("box {i} has non-finite coordinates")));
        }
        let mut items: Vec<usize> = (0..boxes.len()).collect();
        let mut nodes = Vec::with_capacity(2 * boxes.len());
        let root = Self::build_rec(boxes, &mut items, &mut nodes);
        Ok(AabbTree { nodes, root })
    }

    fn build_rec(boxes: &[Aabb], items: &mut [usize], nodes: &mut Vec<Node>) -> usize {
        if let [item] = items {
            nodes.push(Node::Leaf {
                bbox: boxes[*item],
                item: *item,
            });
            return nodes.len() - 1;
        }
        let bbox = items
            .iter()
            .map(|&i| boxes[i])
            .reduce(|a, b| a.merged(&b))
            .expect("non-empty");
        let centers: Vec<Point> = items.iter().map(|&i| boxes[i].center()).collect();
        let spread = Aabb::from_points(&centers).expect("non-empty").diagonal();
        let axis = if spread.x >= spread.y { 0 } else { 1 };
        items.sort_by(|&a, &b| {
            boxes[a].center()[axis]
                .total_cmp(&boxes[b].center()[axis])
                .then(a.cmp(&b))
        });
        let mid = items.len() / 2;
        let (lo, hi) = items.split_at_mut(mid);
        let left = Self::build_rec(boxes, lo, nodes);
        let right = Self::build_rec(boxes, hi, nodes);
        nodes.push(Node::Branch { bbox, left, right });
        nodes.len() - 1
    }

    /// Bounding box of everything in the tree.
    pub fn bbox(&self) -> Aabb {
        *self.nodes[self.root].bbox()
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn rec(nodes: &[Node], n: usize) -> usize {
            match nodes[n] {
                Node::Leaf { .. } => 0,
                Node::Branch { left, right, .. } => 1 + rec(nodes, left).max(rec(nodes, right)),
            }
        }
        rec(&self.nodes, self.root)
    }

    /// Indices of all boxes intersecting `query`, in increasing order.
    pub fn query(&self, query: &Aabb) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if !node.bbox().intersects(query) {
                continue;
            }
            match *node {
                Node::Leaf { item, .. } => out.push(item),
                Node::Branch { left, right, .. } => {
                    stack.push(left);
                    stack.push(right);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Indices of all boxes containing `p`, in increasing order.
    pub fn query_point(&self, p: &Point) -> Vec<usize> {
        self.query(&Aabb::new(*p, *p))
    }
}
