# Normative benchmark plants and shipped controllers (FSM text format).
