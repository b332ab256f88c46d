#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "mixfield/errors.hpp"
#include "mixfield/io.hpp"
#include "mixfield/render.hpp"
#include "mixfield/scene_spec.hpp"

using namespace mixfield;
namespace fs = std::filesystem;

namespace {

std::size_t scene_error_line(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_scene(in);
  } catch (const FormatError& e) {
    return e.position();
  }
  return 0;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "mixfield_test_cli";
  fs::create_directories(dir);
  return dir / name;
}

int run(const std::string& args) {
  const std::string cmd = std::string(MIXFIELD_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("scene parser") {
  std::istringstream in(
      "# mixed scene\n"
      "bbox -1 -1 -1 1 1 1\n"
      "\n"
      "box center=0,0,0 half=0.3,0.1,0.3 material=opaque\n"
      "hemisphere center=0,0.1,0 axis=0,2,0 radius=0.2 material=transparent m=0.01  # dome\n"
      "sphere center=0.5,0,0 radius=0.1 material=transparent alpha=0.2 s=50 d0=1\n"
      "cylinder center=0,0,0 axis=1,0,0 radius=0.1 half_height=0.4 material=opaque\n"
      "plane point=0,-0.5,0 normal=0,1,0 material=opaque\n");
  const SceneSpec spec = parse_scene(in);
  REQUIRE(spec.components.size() == 5);
  CHECK(spec.bbox.min == Vec3::Constant(-1));
  CHECK(std::get<Hemisphere>(spec.components[1].primitive).axis == Vec3::UnitY());
  CHECK(std::get<Transparent>(spec.components[1].material).m == 0.01);
  const double m = std::get<Transparent>(spec.components[2].material).m;
  CHECK(std::abs(closed_form_opacity(50, 1, m) - 0.2) < 1e-9);
  CHECK_FALSE(spec.components[3].is_transparent());

  const auto scene = make_scene(spec);
  CHECK(scene->value(Vec3::Zero()) == doctest::Approx(-0.1));
}

TEST_CASE("scene parser errors carry line numbers") {
  CHECK(scene_error_line("sphere center=0,0,0 radius=0.5 material=opaque\nfoo x=1\n") == 2);
  CHECK(scene_error_line("\n\nsphere center=0,0 radius=0.5 material=opaque\n") == 3);
  CHECK(scene_error_line("sphere center=0,0,0 radius=-1 material=opaque\n") == 1);
  CHECK(scene_error_line("sphere center=0,0,0 radius=0.5 material=glass\n") == 1);
  CHECK(scene_error_line("sphere center=0,0,0 radius=0.5 material=opaque colour=red\n") == 1);
  CHECK(scene_error_line("sphere center=0,0,0 radius=0.5\n") == 1);
  CHECK(scene_error_line("sphere center=0,0,0 radius=0.5 material=transparent alpha=0.9 s=50 d0=1\n") == 1);
  CHECK(scene_error_line("sphere center=0,0,0 radius=0.5 material=transparent m=-0.1\n") == 1);
  CHECK(scene_error_line("bbox 0 0 0 1 1\nsphere center=0,0,0 radius=0.5 material=opaque\n") == 1);
  CHECK(scene_error_line("bbox 0 0 0 0 1 1\n") == 1);
  CHECK(scene_error_line("# nothing\n") == 1);
  CHECK(scene_error_line("cylinder center=0,0,0 axis=0,0,0 radius=1 half_height=1 material=opaque\n") == 1);
  CHECK_THROWS_AS(read_scene(scratch("no-such.scene")), IoError);
}

TEST_CASE("built-in scenes") {
  const SceneSpec mixed = mixed_scene();
  REQUIRE(mixed.components.size() == 2);
  CHECK_FALSE(mixed.components[0].is_transparent());
  CHECK(mixed.components[1].is_transparent());
  const SceneSpec sphere = transparent_sphere_scene(0.01);
  CHECK(std::get<Transparent>(sphere.components[0].material).m == 0.01);
  CHECK(make_scene(sphere)->value(Vec3(0.5, 0, 0)) == doctest::Approx(0.01));
}

TEST_CASE("command line exit codes") {
  CHECK(run("") == 2);
  CHECK(run("--help") == 0);
  CHECK(run("theorem-verify") == 0);
  CHECK(run("theorem-verify --tol 1e-9 --step 1e-2") == 1);
  CHECK(run("theorem-verify --m-list \"\"") == 2);
  CHECK(run("theorem-verify --s-list 10,abc") == 2);

  const fs::path grid = scratch("sphere.anfd");
  CHECK(run("bake --builtin sphere --res 16 --out " + grid.string()) == 0);
  CHECK(read_grid(grid).field.dims() == GridDims{17, 17, 17});
  CHECK(run("bake --grid " + scratch("absent.anfd").string() + " --res 8 --out " + grid.string()) == 3);
  CHECK(run("bake --builtin sphere --builtin mixed --out " + grid.string()) == 2);

  const fs::path scene = scratch("bad.scene");
  std::ofstream(scene) << "sphere center=0,0,0 radius=0.5 material=opaque\nwhat\n";
  CHECK(run("bake --scene " + scene.string() + " --out " + grid.string()) == 3);

  const fs::path obj = scratch("zero.obj");
  CHECK(run("extract --builtin mixed --res 16 --iso 0 --out " + obj.string()) == 2);
  CHECK(run("extract --builtin mixed --res 32 --mode zero-iso --out " + obj.string()) == 0);
  CHECK(run("eval --gt " + obj.string() + " --rec " + obj.string() + " --samples 1000") == 0);

  const fs::path empty = scratch("empty.obj");
  std::ofstream(empty) << "# nothing\n";
  CHECK(run("eval --gt-builtin mixed --rec " + empty.string()) == 1);

  CHECK(run("slice --builtin mixed --axis z --offset 5 --pgm " + scratch("s.pgm").string()) == 2);
  CHECK(run("slice --builtin mixed --axis z --iso 0,0.005 --abs --ppm " + scratch("s.ppm").string()) == 0);
}
