namespace ldst {}
