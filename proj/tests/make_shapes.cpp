// Writes the procedural test shapes to a directory, for trying the CLI.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "test_shapes.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_shapes <dir>\n";
    return 2;
  }
  const std::filesystem::path dir(argv[1]);
  std::filesystem::create_directories(dir);
  auto mesh = [&](const char* name, const polarballs::BoundaryShape<3>& s) {
    std::ofstream os(dir / name);
    polarballs::write_obj(os, s);
  };
  auto poly = [&](const char* name, const polarballs::BoundaryShape<2>& s) {
    std::ofstream os(dir / name);
    polarballs::write_polygon(os, s);
  };
  mesh("sphere.obj", testshapes::sphere(4));
  mesh("cube.obj", testshapes::unit_cube());
  mesh("quadruped.obj", testshapes::quadruped());
  mesh("kitten.obj", testshapes::kitten());
  mesh("bird.obj", testshapes::bird());
  poly("disc.txt", testshapes::circle(256));
  poly("star.txt", testshapes::star(5, 0.45, 1.0, 20));
  poly("blob.txt", testshapes::random_radial_polygon(1));
  return 0;
}
