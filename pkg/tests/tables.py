"""Reference values transcribed by hand from figure captions and the protection table."""

# preset -> (figure, family, parameters, n_gate, phi_ext)
CAPTIONS = {
    "transmon": ("4a", "charge", dict(E_C=0.2, E_J=20.0), 0.0, 0.0),
    "blochnium": ("4b", "flux", dict(E_C=7.07, E_J=4.7, E_L=0.067), 0.0, 0.5),
    "heavy-fluxonium": ("4c", "flux", dict(E_C=0.46, E_J=8.11, E_L=0.24), 0.0, 0.45),
    "bifluxon-ideal": ("6b", "two_mode", dict(E_C_theta=10.0, E_C_phi=10.0, E_J=10.0, E_L=0.05,
                                              flavor="bifluxon"), 0.5, 0.0),
    "bifluxon-realized": ("6c", "two_mode", dict(E_C_theta=7.7, E_C_phi=2.5, E_J=27.2, E_L=1.88,
                                                 flavor="bifluxon"), 0.5, 0.0),
    "zeropi-ideal": ("7b", "two_mode", dict(E_C_theta=0.03, E_C_phi=20.0, E_J=10.0, E_L=0.05,
                                            flavor="zero_pi"), 0.0, 0.0),
    "zeropi-realized": ("7c", "two_mode", dict(E_C_theta=0.092, E_C_phi=1.14, E_J=6.0, E_L=0.38,
                                               flavor="zero_pi"), 0.0, 0.0),
    "hybrid-cos2theta": ("8", "hybrid", dict(E_C=0.284, delta=45.0,
                                             transmissions_j1=(1.0, 1.0, 0.60, 0.0, 0.0),
                                             transmissions_j2=(0.99, 0.78, 0.31, 0.30)), 0.0, 0.5),
}

# realized-case columns: (T1, charge dephasing, flux dephasing).  The phase-slip
# entries ("exponential*") of the single flux modes are out of scope and map
# to not_applicable.
REALIZED_GRADES = {
    "transmon": ("absent", "exponential", "not_applicable"),
    "blochnium": ("absent", "not_applicable", "exponential"),
    "heavy-fluxonium": ("exponential", "not_applicable", "absent"),
    "bifluxon-realized": ("exponential", "linear", "linear"),
    "zeropi-realized": ("exponential", "exponential", "linear"),
    "hybrid-cos2theta": ("exponential", "exponential", "linear"),
}
