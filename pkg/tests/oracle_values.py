"""Frozen quadrature references, generated by make_oracles.py.

mpmath, 50 digits, independent of the package quadrature (different
oval parametrization, different integrator).  Do not regenerate with
package code; rerun make_oracles.py and paste.
"""

# (a, t) -> (J_{-1}, J_0, J_1) on the annulus around the center (1, 0)
SIGMA_PLUS_TRIPLES = {
    (1.0, -1.0): (2.476151566564572732714, 1.972606544349588208082, 1.783407769051630921088),
    (1.0, -0.5): (4.9060467068087320875, 3.14579291005825010057, 2.643329116087499115909),
    (1.0, -1.9): (0.1858109881001512083153, 0.1826640603749282779379, 0.1811238517040083793449),
    (-0.5, -1.0): (7.585687241969580987586, 4.939924729248143425186, 4.578599291394224604559),
    (0.5, -1.0): (4.0897905460909846748, 2.968410075682956656694, 2.643933458198600701664),
    (1.5, -0.7): (1.986284905532850851175, 1.607452744379652931408, 1.446002205415041013069),
}

# (a, t) -> (J_{-1}, J_0, J_1) on the annulus around ((a-2)/a, 0), x < 0
SIGMA_MINUS_TRIPLES = {
    (0.5, 5.0): (-4.438308199302801998398, 10.11753609923277675197, -26.58014315048252177141),
    (0.5, 1.0): (-11.16351981906821254418, 16.76284893636864155018, -38.82784582583630641365),
}

# a -> (J_0(0-), J_1(0-)), the finite loop limits
LOOP_LIMITS = {
    1.0: (4.712388980384689857694, 3.464101615137754587055),
    0.5: (5.625333603670202989861, 4.289921655852550954423),
    1.9: (2.793280844080354198718, 2.042354553162900708506),
    -0.9: (8.536637155412591890694, 8.024304107303156478122),
}

# h -> (contour integral of y dx, of y^2 dx) on the ellipse-family oval
APPENDIX_MOMENTS = {
    -0.5: (-2.927964092625529849543, -10.23951932606232489502),
    -1.0: (-1.087532059237799276762, -4.157068382925123224871),
    -0.05: (-5.075503543514343213863, -15.44983705324766853839),
}
