"""atomdem - atom-photon entanglement of a driven three-level atom."""
