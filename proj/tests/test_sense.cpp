#include "oracles.hpp"

#include "semcur/error.hpp"
#include "semcur/sense.hpp"
#include "semcur/synthetic.hpp"

#include <doctest.h>

#include <sstream>

using namespace semcur;
using synthetic::Rig;

namespace
{
    Sensor make_sensor(const Rig &rig, const DepthFrame &baseline)
    {
        return Sensor(baseline, rig.corners(), rig.display_width, rig.display_height, rig.nadir);
    }

    DepthFrame flat(const Rig &rig) { return DepthFrame(rig.width, rig.height, static_cast<std::uint16_t>(rig.table_mm)); }
}

TEST_SUITE("sense")
{
    TEST_CASE("homography maps the corners exactly")
    {
        const std::array<Vec2, 4> src{Vec2{10, 20}, Vec2{500, 40}, Vec2{480, 400}, Vec2{30, 380}};
        const std::array<Vec2, 4> dst{Vec2{0, 0}, Vec2{1920, 0}, Vec2{1920, 1080}, Vec2{0, 1080}};
        const auto h = Homography::from_quads(src, dst);
        const auto inv = h.inverse();
        for (int i = 0; i < 4; ++i)
        {
            CHECK(distance(h.apply(src[i]), dst[i]) <= 1e-6);
            CHECK(distance(inv.apply(dst[i]), src[i]) <= 1e-6);
        }
        const std::array<Vec2, 4> line{Vec2{0, 0}, Vec2{1, 1}, Vec2{2, 2}, Vec2{3, 3}};
        CHECK_THROWS_AS(Homography::from_quads(line, dst), CalibrationError);
    }

    TEST_CASE("calibration on a flat table")
    {
        const Rig rig;
        const auto cal = calibrate(flat(rig), rig.corners(), rig.display_width, rig.display_height, rig.nadir);
        const auto corners = rig.corners();
        const std::array<Vec2, 4> display{Vec2{0, 0}, Vec2{960, 0}, Vec2{960, 540}, Vec2{0, 540}};
        for (int i = 0; i < 4; ++i)
            CHECK(distance(cal.to_display(corners[i], 0.0), display[i]) <= 1.0);
        CHECK(cal.sensor_height_mm == doctest::Approx(1000.0));
        CHECK(cal.table_depth_at({200, 200}) == doctest::Approx(1000.0));
        // a point raised halfway to the sensor is seen twice as far from the nadir
        CHECK(distance(cal.correct_parallax({356, 256}, 500.0), Vec2{306, 256}) <= 1e-9);
    }

    TEST_CASE("calibration rejects bad quads and invalid baselines")
    {
        const Rig rig;
        auto corners = rig.corners();
        std::swap(corners[1], corners[2]);
        CHECK_THROWS_AS(calibrate(flat(rig), corners, 960, 540), CalibrationError);
        const DepthFrame blank(rig.width, rig.height, 0);
        CHECK_THROWS_AS(calibrate(blank, rig.corners(), 960, 540), CalibrationError);
    }

    TEST_CASE("identical frame commits nothing")
    {
        const Rig rig;
        auto sensor = make_sensor(rig, flat(rig));
        CHECK(sensor.commit(flat(rig)).empty());
    }

    TEST_CASE("one block placed")
    {
        synthetic::Session s(Rig{}, 1);
        auto sensor = make_sensor(s.rig(), s.baseline());
        const auto c = s.place({256, 256}, {40, 40}, 30.0);
        REQUIRE(c);
        const auto events = sensor.commit(c->frame);
        REQUIRE(events.size() == 1);
        CHECK(events[0].kind == InteractionKind::placed);
        CHECK(events[0].height_mm == doctest::Approx(30.0).epsilon(0.07));
        CHECK(distance(events[0].display_pos, c->expected[0].display_pos) <= 2.0);
        CHECK(events[0].footprint_px.w == doctest::Approx(80.0).epsilon(0.1));
        CHECK_FALSE(events[0].concurrent);
        CHECK(events[0].commit_id == 1);
    }

    TEST_CASE("block moved A to B")
    {
        synthetic::Session s(Rig{}, 2);
        auto sensor = make_sensor(s.rig(), s.baseline());
        sensor.commit(s.place({100, 200}, {40, 40}, 30.0)->frame);
        const auto c = s.move(1, {400, 300});
        REQUIRE(c);
        const auto events = sensor.commit(c->frame);
        REQUIRE(events.size() == 1);
        CHECK(events[0].kind == InteractionKind::moved);
        REQUIRE(events[0].from_pos);
        CHECK(oracle::events_match(events, c->expected, 2.0));
    }

    TEST_CASE("two blocks in one commit are concurrent")
    {
        synthetic::Session s(Rig{}, 3);
        auto sensor = make_sensor(s.rig(), s.baseline());
        const auto c = s.place_two();
        REQUIRE(c);
        const auto events = sensor.commit(c->frame);
        REQUIRE(events.size() == 2);
        CHECK(events[0].concurrent);
        CHECK(events[1].concurrent);
        CHECK(oracle::events_match(events, c->expected, 2.0));
    }

    TEST_CASE("place then remove returns to the baseline")
    {
        synthetic::Session s(Rig{}, 4);
        auto sensor = make_sensor(s.rig(), s.baseline());
        const auto placed = sensor.commit(s.place({300, 250}, {50, 60}, 45.0)->frame);
        const auto removed = sensor.commit(s.remove(1).frame);
        REQUIRE(placed.size() == 1);
        REQUIRE(removed.size() == 1);
        CHECK(removed[0].kind == InteractionKind::removed);
        CHECK(distance(placed[0].display_pos, removed[0].display_pos) <= 2.0);
        CHECK(sensor.reference().depth_mm == s.baseline().depth_mm);
    }

    TEST_CASE("size mismatch and mostly-invalid frames are rejected")
    {
        const Rig rig;
        auto sensor = make_sensor(rig, flat(rig));
        CHECK_THROWS_AS(sensor.commit(DepthFrame(100, 100, 1000)), ValidationError);
        auto bad = flat(rig);
        for (std::size_t i = 0; i < bad.size() * 6 / 10; ++i)
            bad.depth_mm[i] = 0;
        const auto before = sensor.reference();
        CHECK_THROWS_AS(sensor.commit(bad), CommitRejected);
        CHECK(sensor.reference() == before);
        CHECK(sensor.commits() == 0);
    }

    TEST_CASE("small or shallow changes are ignored")
    {
        synthetic::Session s(Rig{}, 5);
        auto sensor = make_sensor(s.rig(), s.baseline());
        CHECK(sensor.commit(s.place({200, 200}, {40, 40}, 8.0)->frame).empty());
        CHECK(sensor.commit(s.place({350, 300}, {6, 6}, 40.0)->frame).empty());
    }

    TEST_CASE("depth frame files round trip")
    {
        synthetic::Session s(Rig{}, 6, {.noise_mm = 3.0});
        const auto frame = s.place({256, 256}, {40, 40}, 30.0)->frame;
        for (const bool binary : {true, false})
        {
            std::stringstream buf;
            write_depth_frame(buf, frame, binary);
            auto back = read_depth_frame(buf);
            back.frame_id = frame.frame_id;
            CHECK(back == frame);
        }
        std::istringstream truncated("4 4 1\n1 2 3");
        CHECK_THROWS(read_depth_frame(truncated));
    }

    TEST_CASE("random commit sequences match ground truth")
    {
        for (const double noise : {0.0, 3.0})
        {
            synthetic::Session s(Rig{}, 77, {.noise_mm = noise});
            auto sensor = make_sensor(s.rig(), s.baseline());
            int ok = 0;
            const int n = 150;
            for (int i = 0; i < n; ++i)
            {
                const auto c = s.next();
                ok += oracle::events_match(sensor.commit(c.frame), c.expected, 2.0);
            }
            INFO("noise " << noise);
            CHECK(ok >= (noise == 0.0 ? n : n * 98 / 100));
        }
    }
}
