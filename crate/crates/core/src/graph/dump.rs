//! Plain-text debug dump of a voxel graph: a node table and an edge list.
//!
//! Node table rows: `index ix iy iz intensity expectation entropy label`
//! with label `0` (background), `1` (foreground), or `-1` (unlabeled).
//! Edge list rows: `node_i node_j weight`, one per undirected edge.

use std::io::{self, Write};

use crate::graph::{NodeLabel, VoxelGraph};

impl VoxelGraph {
    pub fn write_node_table<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (i, n) in self.nodes.iter().enumerate() {
            let label = match n.label {
                NodeLabel::Background => 0,
                NodeLabel::Foreground => 1,
                NodeLabel::Unlabeled => -1,
            };
            writeln!(
                w,
                "{i} {} {} {} {} {} {} {label}",
                n.voxel.0, n.voxel.1, n.voxel.2, n.intensity, n.expectation, n.entropy
            )?;
        }
        Ok(())
    }

    pub fn write_edge_list<W: Write>(&self, mut w: W) -> io::Result<()> {
        for i in 0..self.node_count() {
            for (j, weight) in self.csr.row(i) {
                if j > i {
                    writeln!(w, "{i} {j} {weight}")?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use crate::graph::{build_edges, EdgeParams, NodeLabel, NodeRecord, VoxelGraph};
    use crate::volume::Volume3;

    #[test]
    fn dump_formats_are_line_per_item() {
        let roi = Volume3::mask_from_bits((2, 1, 1), (1.0, 1.0, 1.0), &[true, true]);
        let nodes = vec![
            NodeRecord {
                voxel: (0, 0, 0),
                intensity: -1.0,
                expectation: 0.25,
                entropy: 0.81,
                label: NodeLabel::Background,
            },
            NodeRecord {
                voxel: (1, 0, 0),
                intensity: 1.0,
                expectation: 0.75,
                entropy: 0.81,
                label: NodeLabel::Unlabeled,
            },
        ];
        assert_eq!(build_edges(&nodes, &roi, 0, 0).len(), 1);
        let g = VoxelGraph::build(
            nodes,
            &roi,
            &EdgeParams {
                k: 0,
                seed: 0,
                lambda: 1.0,
                sigma1: 0.5,
                sigma2: 100.0,
            },
        )
        .unwrap();

        let mut table = Vec::new();
        g.write_node_table(&mut table).unwrap();
        let table = String::from_utf8(table).unwrap();
        assert_eq!(table.lines().count(), 2);
        assert!(table.lines().next().unwrap().starts_with("0 0 0 0 "));
        assert!(table.lines().next().unwrap().ends_with(" 0"));
        assert!(table.lines().nth(1).unwrap().ends_with(" -1"));

        let mut edges = Vec::new();
        g.write_edge_list(&mut edges).unwrap();
        let edges = String::from_utf8(edges).unwrap();
        assert_eq!(edges.lines().count(), 1);
        assert!(edges.starts_with("0 1 "));
    }
}
