//! Configurations shipped for the reference figures.

/// A shipped sweep: identifier, one-line description, config text.
#[derive(Debug, Clone, Copy)]
pub struct Figure {
    pub id: &'static str,
    pub description: &'static str,
    pub config: &'static str,
}

pub const FIGURES: [Figure; 6] = [
    Figure {
        id: "fig3",
        description: "convergence of the element-wise optimizer against the baselines, N = 4 end-fire",
        config: include_str!("../../../../configs/fig3.cfg"),
    },
    Figure {
        id: "fig4",
        description: "array gain versus spacing and N, front-fire",
        config: include_str!("../../../../configs/fig4.cfg"),
    },
    Figure {
        id: "fig5",
        description: "array gain versus spacing and N, end-fire",
        config: include_str!("../../../../configs/fig5.cfg"),
    },
    Figure {
        id: "fig6",
        description: "array gain versus spacing under element loss, N = 4 end-fire",
        config: include_str!("../../../../configs/fig6.cfg"),
    },
    Figure {
        id: "fig7",
        description: "array gain versus spacing and N, corner geometry",
        config: include_str!("../../../../configs/fig7.cfg"),
    },
    Figure {
        id: "fig8",
        description: "array gain versus spacing and N, oblique geometry",
        config: include_str!("../../../../configs/fig8.cfg"),
    },
];

pub fn find(id: &str) -> Option<&'static Figure> {
    FIGURES.iter().find(|f| f.id == id)
}
