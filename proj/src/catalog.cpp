#include "lsbec/catalog.hpp"

namespace lsbec {

// Built-in experiment suite. Reference values are published benchmark
// results; runs with asserted = false carry values whose exact setup is not
// fully specified in the source and are kept as order-of-magnitude
// annotations only.
const std::vector<CatalogEntry>& catalog() {
    static const std::vector<CatalogEntry> entries = {
        {
            "lshape-laplace",
            "Dirichlet Laplacian on an L-shaped box, interaction-free",
            {
                {
                    "eigenvalue",
                    "name = lshape-laplace\n"
                    "shape = lshape(-1, -1, 1, 1, 0, 0)\n"
                    "box = -2*pi/5, -2*pi/5, 2*pi/5, 2*pi/5\n"
                    "model = cubic\n"
                    "beta = 0\n"
                    "potential = zero\n"
                    "resolutions = 4*pi/300, 4*pi/400, 4*pi/500, 4*pi/600, 4*pi/700\n"
                    "dt = 10*h\n"
                    "report_scale = 2\n"
                    "reference_mu = 9.639723844021\n",
                    true,
                    "reported value is 2*mu, the eigenvalue of the full (not halved) "
                    "Laplacian; the re-entrant corner limits the rate to about h^(4/3)",
                },
            },
        },
        {
            "square-harmonic",
            "Harmonic trap on a square of half-width 2, beta = 50",
            {
                {
                    "ground",
                    "name = square-harmonic\n"
                    "shape = rectangle(-2, -2, 2, 2)\n"
                    "box = -5*pi/6, -5*pi/6, 5*pi/6, 5*pi/6\n"
                    "model = cubic\n"
                    "beta = 50\n"
                    "potential = harmonic\n"
                    "resolutions = 5*pi/180, 5*pi/240, 5*pi/300, 5*pi/360\n"
                    "dt = h\n"
                    "rescale = off\n"
                    "reference_mu = 6.188543396102850\n",
                    true,
                    "half-width 2: a side-2 square is ruled out by the bound "
                    "mu >= beta/area = 12.5 > mu_ref",
                },
                {
                    "rescaled",
                    "name = square-harmonic-rescaled\n"
                    "shape = rectangle(-2, -2, 2, 2)\n"
                    "box = -5*pi/6, -5*pi/6, 5*pi/6, 5*pi/6\n"
                    "model = cubic\n"
                    "beta = 50\n"
                    "potential = harmonic\n"
                    "resolutions = 5*pi/360\n"
                    "dt = h\n"
                    "rescale = on\n"
                    "reference_mu = 6.188543396102850\n",
                    true,
                    "same problem through the rescaled flow; must agree with the "
                    "plain route to 1e-6",
                },
            },
        },
        {
            "circle-lattice",
            "Harmonic plus optical-lattice trap on a disk of radius 2, beta = 200",
            {
                {
                    "ground",
                    "name = circle-lattice\n"
                    "shape = circle(0, 0, 2)\n"
                    "box = -pi, -pi, pi, pi\n"
                    "model = cubic\n"
                    "beta = 200\n"
                    "potential = 0.5*(x^2 + y^2) + 50*(sin(pi*x)^2 + sin(pi*y)^2)\n"
                    "resolutions = 2*pi/100, 2*pi/140, 2*pi/200, 2*pi/280\n"
                    "dt = h\n"
                    "reference_mu = 68.0881\n"
                    "reference_energy = 52.8319\n",
                    true,
                    "beta = 200 routes through the rescaled flow automatically",
                },
            },
        },
        {
            "ellipse-box",
            "Box potential on an ellipse with semi-axes 1.5 and 2.0, beta = 4",
            {
                {
                    "ground",
                    "name = ellipse-box\n"
                    "shape = ellipse(1.5, 2.0)\n"
                    "box = -pi, -pi, pi, pi\n"
                    "model = cubic\n"
                    "beta = 4\n"
                    "potential = zero\n"
                    "resolutions = pi/60, pi/90, pi/120, pi/180\n"
                    "dt = h\n"
                    "reference_mu = 1.8055\n",
                    true,
                    "",
                },
                {
                    "excited",
                    "name = ellipse-box-excited\n"
                    "shape = ellipse(1.5, 2.0)\n"
                    "box = -pi, -pi, pi, pi\n"
                    "model = cubic\n"
                    "beta = 4\n"
                    "potential = zero\n"
                    "resolutions = pi/90\n"
                    "dt = h\n"
                    "excited_k = 1\n"
                    "reference_mu = 3.0755\n",
                    true,
                    "first excited state; the flow holds it because the elliptical "
                    "deformation splits the dipole degeneracy of the disk",
                },
                {
                    "shaped-potential",
                    "name = ellipse-shaped-potential\n"
                    "shape = ellipse(1.5, 2.0)\n"
                    "box = -pi, -pi, pi, pi\n"
                    "model = cubic\n"
                    "beta = 4\n"
                    "potential = 4*(x^2/4 + y^2/2.25 - 0.3)^2\n"
                    "resolutions = pi/90\n"
                    "dt = h\n"
                    "reference_mu = 2.3411\n",
                    true,
                    "elliptic ring potential with axes swapped against the domain",
                },
            },
        },
        {
            "crescent-gauss",
            "Gaussian obstacle in a crescent, beta = 10",
            {
                {
                    "ground",
                    "name = crescent-gauss\n"
                    "shape = csg_difference(circle(0, 0, 0.95), circle(0.34, 0, 0.95))\n"
                    "box = -pi/3, -pi/3, pi/3, pi/3\n"
                    "model = cubic\n"
                    "beta = 10\n"
                    "potential = 4*exp(-2*(x + 0.35)^2 - y^2)\n"
                    "resolutions = 2*pi/180, 2*pi/240, 2*pi/300, 2*pi/420\n"
                    "dt = h\n",
                    false,
                    "published value 86.5431 is not asserted: the crescent parameters "
                    "are not published; this one (maximum width 0.34) matches the "
                    "magnitude, and checks are property-based",
                },
                {
                    "excited-control",
                    "name = crescent-gauss-excited\n"
                    "shape = csg_difference(circle(0, 0, 0.95), circle(0.34, 0, 0.95))\n"
                    "box = -pi/3, -pi/3, pi/3, pi/3\n"
                    "model = cubic\n"
                    "beta = 0.001\n"
                    "potential = 4*exp(-2*(x + 0.35)^2 - y^2)\n"
                    "resolutions = 2*pi/240\n"
                    "dt = h\n"
                    "excited_k = 1\n",
                    false,
                    "negative control: the excited start is expected to collapse to "
                    "the ground state on this domain, matching the published behavior",
                },
            },
        },
        {
            "sector-quintic",
            "Cubic-quintic interaction in a circular sector with a radial cosine trap",
            {
                {
                    "ground",
                    "name = sector-quintic\n"
                    "shape = sector(3, 2*pi/3)\n"
                    "box = -3.3, -3.3, 3.3, 3.3\n"
                    "model = cubic-quintic\n"
                    "beta = 1\n"
                    "gamma = 1\n"
                    "potential = 1 - cos(2*pi*sqrt(x^2 + y^2))\n"
                    "resolutions = 2*pi/160, 2*pi/200, 2*pi/260, 2*pi/320\n"
                    "dt = h\n",
                    false,
                    "published value 2.432 is not asserted: the sector parameters are "
                    "not published; radius 3 with a 2*pi/3 opening matches the "
                    "magnitude, and checks are property-based",
                },
            },
        },
        {
            "hoi-ellipse",
            "Gradient-coupled interaction on the ellipse, beta = delta = 10",
            {
                {
                    "ground",
                    "name = hoi-ellipse\n"
                    "shape = ellipse(1.5, 2.0)\n"
                    "box = -pi, -pi, pi, pi\n"
                    "model = hoi-split\n"
                    "beta = 10\n"
                    "delta = 10\n"
                    "potential = zero\n"
                    "resolutions = pi/45, pi/60, pi/90\n"
                    "dt = 0.001\n"
                    "reference_mu = 6.1360\n"
                    "reference_energy = 5.7685\n",
                    true,
                    "fixed small time step; the split flow is only conditionally "
                    "stable",
                },
            },
        },
    };
    return entries;
}

const CatalogEntry* find_entry(const std::string& name) {
    for (const CatalogEntry& e : catalog())
        if (e.name == name) return &e;
    return nullptr;
}

} // namespace lsbec
