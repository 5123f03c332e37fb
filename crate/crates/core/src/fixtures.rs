//! The car-service running example: a specification and its domain model.

pub const CAR_SERVICE_MODEL: &str = include_str!("../fixtures/car_service.json");
pub const CAR_SERVICE_SPEC: &str = include_str!("../fixtures/car_service.txt");

/// A two-class model whose `reservations` end is optional and many-valued.
pub const USER_RESERVATION_MODEL: &str = include_str!("../fixtures/user_reservation.json");
