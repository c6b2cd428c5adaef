// Python bindings: images cross the boundary as float64 (H, W, 3) arrays.

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <set>

#include "vexel/embedder.hpp"
#include "vexel/guidance.hpp"
#include "vexel/image_ops.hpp"
#include "vexel/io/config.hpp"
#include "vexel/io/png.hpp"
#include "vexel/io/svg.hpp"
#include "vexel/optimizer.hpp"
#include "vexel/rasterizer.hpp"
#include "vexel/vectorizer.hpp"

namespace py = pybind11;
using namespace vexel;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Raster to_raster(const Array& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw Error("image arrays must have shape (height, width, 3)");
  Raster r(int(a.shape(1)), int(a.shape(0)));
  std::memcpy(r.pixels.data(), a.data(), r.pixels.size() * sizeof(double));
  return r;
}

Array to_array(const Raster& r) {
  Array a({py::ssize_t(r.height), py::ssize_t(r.width), py::ssize_t(3)});
  std::memcpy(a.mutable_data(), r.pixels.data(), r.pixels.size() * sizeof(double));
  return a;
}

Array to_array(const std::vector<double>& v) {
  Array a(py::ssize_t(v.size()));
  std::memcpy(a.mutable_data(), v.data(), v.size() * sizeof(double));
  return a;
}

std::vector<double> to_vector(const Array& a) { return {a.data(), a.data() + a.size()}; }

ParamGroup parse_group(const std::string& name) {
  if (name == "both") return ParamGroup::both;
  if (name == "shape") return ParamGroup::shape;
  if (name == "color") return ParamGroup::color;
  throw Error("unknown parameter group \"" + name + "\" (expected both, shape or color)");
}

// Lets Python classes implement the backend contract.
class PyBackend : public EmbedderBackend {
 public:
  Embedding embed_text(const std::string& text) const override {
    py::gil_scoped_acquire gil;
    return call<Embedding>("embed_text", text);
  }
  Embedding embed_image(const Raster& image) const override {
    py::gil_scoped_acquire gil;
    return call<Embedding>("embed_image", to_array(image));
  }
  Raster image_vjp(const Raster& image, std::span<const double> upstream) const override {
    py::gil_scoped_acquire gil;
    const Raster g = to_raster(call<Array>("image_vjp", to_array(image), to_array(std::vector<double>(
                                                                             upstream.begin(), upstream.end()))));
    if (!g.same_shape(image)) throw BackendError("image_vjp returned a gradient of the wrong shape");
    return g;
  }
  int input_size() const override {
    py::gil_scoped_acquire gil;
    return call<int>("input_size");
  }
  int dim() const override {
    py::gil_scoped_acquire gil;
    return call<int>("dim");
  }

 private:
  template <typename T, typename... Args>
  T call(const char* name, Args&&... args) const {
    py::function f = py::get_override(static_cast<const EmbedderBackend*>(this), name);
    if (!f) throw BackendError(std::string("backend does not implement ") + name);
    try {
      return f(std::forward<Args>(args)...).template cast<T>();
    } catch (const py::error_already_set& e) {
      throw BackendError(std::string(name) + " failed: " + e.what());
    } catch (const py::cast_error& e) {
      throw BackendError(std::string(name) + " returned an unexpected type: " + e.what());
    }
  }
};

// Keeps the Python object alive for as long as C++ holds the backend.
std::shared_ptr<EmbedderBackend> hold(py::object obj) {
  auto* raw = obj.cast<EmbedderBackend*>();
  auto keep = std::make_shared<py::object>(std::move(obj));
  return std::shared_ptr<EmbedderBackend>(raw, [keep](EmbedderBackend*) mutable {
    py::gil_scoped_acquire gil;
    keep.reset();
  });
}

py::dict backend_config_dict(const BackendConfig& c) {
  py::dict d;
  d["kind"] = c.kind;
  d["seed"] = c.seed;
  d["dim"] = c.dim;
  d["input_size"] = c.input_size;
  d["text_model"] = c.text_model;
  d["image_model"] = c.image_model;
  return d;
}

py::list terms_list(const std::vector<LossTerm>& terms) {
  py::list out;
  for (const auto& t : terms) {
    const char* kind = t.kind == LossTerm::Kind::roi ? "roi" : t.kind == LossTerm::Kind::patch ? "patch" : "content";
    out.append(py::dict(py::arg("kind") = kind, py::arg("roi") = t.roi, py::arg("weight") = t.weight,
                        py::arg("value") = t.value));
  }
  return out;
}

// Kinds whose factories hold Python callables; dropped before the
// interpreter shuts down.
std::set<std::string>& python_kinds() {
  static std::set<std::string> kinds;
  return kinds;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Layered vector editing driven by embedding-space losses.";

  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  static py::exception<BackendError> backend_error(m, "BackendError", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const BackendError& e) {
      py::set_error(backend_error, e.what());
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  py::class_<Round>(m, "Round")
      .def(py::init<>())
      .def_readwrite("precision", &Round::precision)
      .def_property(
          "region",
          [](const Round& r) -> py::object {
            if (!r.region) return py::none();
            return py::make_tuple(r.region->x, r.region->y, r.region->width, r.region->height);
          },
          [](Round& r, std::optional<std::array<int, 4>> v) {
            r.region = v ? std::optional<PixelRect>(PixelRect{(*v)[0], (*v)[1], (*v)[2], (*v)[3]}) : std::nullopt;
          })
      .def_readwrite("elements", &Round::elements);

  py::class_<PathElement>(m, "PathElement")
      .def(py::init([](const Array& points, std::array<double, 4> fill, ElementId id) {
             if (points.ndim() != 2 || points.shape(1) != 2) throw Error("points must have shape (n, 2)");
             std::vector<Point> pts(std::size_t(points.shape(0)));
             for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = {points.at(i, 0), points.at(i, 1)};
             return PathElement{CubicPath(std::move(pts)), {fill[0], fill[1], fill[2], fill[3]}, id};
           }),
           py::arg("points"), py::arg("fill"), py::arg("id"))
      .def_property_readonly("points",
                             [](const PathElement& e) {
                               py::array_t<double> a({py::ssize_t(e.path.size()), py::ssize_t(2)});
                               auto v = a.mutable_unchecked<2>();
                               for (std::size_t i = 0; i < e.path.size(); ++i) {
                                 v(i, 0) = e.path[i].x;
                                 v(i, 1) = e.path[i].y;
                               }
                               return a;
                             })
      .def_property(
          "fill", [](const PathElement& e) { return py::make_tuple(e.fill.r, e.fill.g, e.fill.b, e.fill.a); },
          [](PathElement& e, std::array<double, 4> f) { e.fill = {f[0], f[1], f[2], f[3]}; })
      .def_readwrite("id", &PathElement::id);

  py::class_<VectorDocument>(m, "VectorDocument")
      .def(py::init([](int width, int height) {
             VectorDocument d;
             d.width = width;
             d.height = height;
             return d;
           }),
           py::arg("width"), py::arg("height"))
      .def_readwrite("width", &VectorDocument::width)
      .def_readwrite("height", &VectorDocument::height)
      .def_readwrite("rounds", &VectorDocument::rounds)
      .def_property_readonly("element_count", &VectorDocument::element_count)
      .def("__eq__", [](const VectorDocument& a, const VectorDocument& b) { return a == b; })
      .def("to_svg", &serialize_svg)
      .def_static("from_svg", [](const std::string& text) { return parse_svg(text); })
      .def("__repr__", [](const VectorDocument& d) {
        return "<VectorDocument " + std::to_string(d.width) + "x" + std::to_string(d.height) + ", " +
               std::to_string(d.rounds.size()) + " rounds, " + std::to_string(d.element_count()) + " elements>";
      });

  py::class_<RunConfig>(m, "Config")
      .def(py::init<>())
      .def_static("from_json", [](const std::string& text) { return parse_config(text); })
      .def_static("load", &load_config, py::arg("path"))
      .def("to_json", &dump_config)
      .def_readwrite("input", &RunConfig::input)
      .def_readwrite("output", &RunConfig::output)
      .def_property_readonly("backend", [](const RunConfig& c) { return backend_config_dict(c.backend); });

  py::class_<EmbedderBackend, PyBackend, std::shared_ptr<EmbedderBackend>>(m, "Backend")
      .def(py::init<>())
      .def("embed_text", &EmbedderBackend::embed_text)
      .def("embed_image", [](const EmbedderBackend& b, const Array& img) { return b.embed_image(to_raster(img)); })
      .def("image_vjp",
           [](const EmbedderBackend& b, const Array& img, const Array& upstream) {
             const auto u = to_vector(upstream);
             return to_array(b.image_vjp(to_raster(img), u));
           })
      .def("input_size", &EmbedderBackend::input_size)
      .def("dim", &EmbedderBackend::dim);

  py::class_<LinearMockEmbedder, EmbedderBackend, std::shared_ptr<LinearMockEmbedder>>(m, "MockBackend")
      .def(py::init<std::uint64_t, int, int>(), py::arg("seed") = 0, py::arg("dim") = 64, py::arg("input_size") = 32)
      .def("register_text", &LinearMockEmbedder::register_text, py::arg("text"), py::arg("embedding"))
      .def_property_readonly("seed", &LinearMockEmbedder::seed);

  m.def(
      "make_backend", [](const RunConfig& c) { return make_backend(c.backend); }, py::arg("config"),
      "Builds the backend named in config.backend.");
  m.def(
      "register_backend_factory",
      [](const std::string& kind, py::function factory) {
        python_kinds().insert(kind);
        auto f = std::make_shared<py::function>(std::move(factory));
        register_backend_factory(kind, [f](const BackendConfig& c) {
          py::gil_scoped_acquire gil;
          try {
            return hold((*f)(backend_config_dict(c)));
          } catch (const py::error_already_set& e) {
            throw BackendError(e.what());
          }
        });
      },
      py::arg("kind"), py::arg("factory"),
      "Registers factory(config: dict) -> Backend for backend.kind == kind.");

  py::module_::import("atexit").attr("register")(py::cpp_function([] {
    for (const auto& kind : python_kinds()) register_backend_factory(kind, {});
    python_kinds().clear();
  }));

  m.def("set_threads", &set_thread_count, py::arg("threads"));

  m.def("read_png", [](const std::string& p) { return to_array(read_png(p)); }, py::arg("path"));
  m.def("write_png", [](const std::string& p, const Array& img) { write_png(p, to_raster(img)); }, py::arg("path"),
        py::arg("image"));
  m.def("read_svg", &read_svg, py::arg("path"));
  m.def("write_svg", &write_svg, py::arg("path"), py::arg("document"));

  m.def(
      "vectorize",
      [](const Array& img, std::optional<RunConfig> config, std::optional<std::uint64_t> seed) {
        VectorizeConfig vc = config ? config->vectorize : VectorizeConfig::defaults();
        if (seed) vc.seed = *seed;
        const Raster r = to_raster(img);
        py::gil_scoped_release release;
        return vectorize(r, vc);
      },
      py::arg("image"), py::arg("config") = py::none(), py::arg("seed") = py::none());

  m.def(
      "render",
      [](const VectorDocument& doc, std::optional<std::pair<int, int>> size, double bandwidth,
         int segments_per_cubic) {
        RenderSettings s;
        s.bandwidth = bandwidth;
        s.segments_per_cubic = segments_per_cubic;
        const VectorDocument d = size ? scale_document(doc, size->first, size->second) : doc;
        Raster r;
        {
          py::gil_scoped_release release;
          r = render(d, s);
        }
        return to_array(r);
      },
      py::arg("document"), py::arg("size") = py::none(), py::arg("bandwidth") = 0.5,
      py::arg("segments_per_cubic") = 16, "Renders onto white; size=(width, height) rescales first.");

  m.def(
      "render_backward",
      [](const VectorDocument& doc, const Array& pixel_grad) {
        auto [img, tape] = render_with_tape(doc);
        return to_array(backward(tape, to_raster(pixel_grad)).values);
      },
      py::arg("document"), py::arg("pixel_grad"),
      "Gradient of sum(pixel_grad * render(document)) in flatten_params(document, 'both') order.");

  m.def(
      "flatten_params", [](const VectorDocument& d, const std::string& g) {
        return to_array(flatten_params(d, parse_group(g)).values);
      },
      py::arg("document"), py::arg("group") = "both");
  m.def(
      "apply_params",
      [](const VectorDocument& d, const Array& values, const std::string& g) {
        ParamVector p = flatten_params(d, parse_group(g));
        if (std::size_t(values.size()) != p.size())
          throw Error("expected " + std::to_string(p.size()) + " values, got " + std::to_string(values.size()));
        p.values = to_vector(values);
        return apply_params(d, p);
      },
      py::arg("document"), py::arg("values"), py::arg("group") = "both");

  m.def(
      "directional_loss",
      [](const EmbedderBackend& b, const std::string& prompt, const std::string& reference, const Array& generated,
         const Array& source) {
        const auto r = directional_loss(b, prompt, reference, to_raster(generated), to_raster(source));
        return py::make_tuple(r.loss, to_array(r.grad));
      },
      py::arg("backend"), py::arg("prompt"), py::arg("reference"), py::arg("generated"), py::arg("source"),
      "Returns (loss, gradient with respect to generated).");
  m.def(
      "clip_score",
      [](const EmbedderBackend& b, const Array& img, const std::string& prompt) {
        return clip_score(b, to_raster(img), prompt);
      },
      py::arg("backend"), py::arg("image"), py::arg("prompt"));
  m.def("patch_side", [](std::array<int, 4> roi, double fraction) {
    return patch_side({roi[0], roi[1], roi[2], roi[3]}, fraction);
  }, py::arg("roi"), py::arg("fraction") = 0.8);

  m.def(
      "total_loss",
      [](const EmbedderBackend& b, const RunConfig& config, const Array& current, const Array& initial,
         std::uint64_t seed) {
        Rng rng(seed);
        const auto t = total_loss(b, config.optimizer.guidance, to_raster(current), to_raster(initial), rng);
        return py::make_tuple(t.loss, to_array(t.grad), terms_list(t.terms));
      },
      py::arg("backend"), py::arg("config"), py::arg("current"), py::arg("initial"), py::arg("seed") = 0,
      "Returns (loss, pixel gradient, terms) for the config's guidance section.");

  m.def(
      "optimize",
      [](const VectorDocument& doc, const Array& initial, const RunConfig& config, const EmbedderBackend& backend,
         std::optional<py::function> progress) {
        OptimizeConfig opt = config.optimizer;
        if (config.subregion) opt.mask = select_intersecting(doc, *config.subregion);
        ProgressCallback cb;
        if (progress) {
          cb = [&progress](int it, double loss, const Raster* snap) {
            py::gil_scoped_acquire gil;
            (*progress)(it, loss, snap ? py::object(to_array(*snap)) : py::object(py::none()));
          };
        }
        const Raster init = to_raster(initial);
        RunReport report;
        {
          py::gil_scoped_release release;
          report = optimize(doc, init, opt, backend, cb);
        }
        py::list history;
        for (const auto& rec : report.history)
          history.append(py::dict(py::arg("loss") = rec.loss, py::arg("terms") = terms_list(rec.terms)));
        py::dict out;
        out["document"] = report.final_document;
        out["losses"] = to_array(report.losses());
        out["history"] = history;
        out["snapshots"] = report.snapshots;
        return out;
      },
      py::arg("document"), py::arg("initial"), py::arg("config"), py::arg("backend"), py::arg("progress") = py::none(),
      "Runs the optimizer; progress(iteration, loss, snapshot_or_None) is called after every step.");
}
