# -*- coding: utf-8 -*-

"""
propclass.dates
~~~~~~~~~~~~~~~

Timestamp helpers for run manifests and training logs.
"""

from datetime import datetime

import arrow
import pytz


def utc_now():
    """The current time as a UTC-localized datetime.

    :rtype: datetime
    """
    return arrow.utcnow().datetime


def format_iso_datetime(datetime_obj):
    """Formats the given datetime as a UTC-zoned ISO 8601 date string.

    :param datetime_obj: The datetime or date object.
    :type datetime_obj: datetime
    :return: The datetime object in 8601 string form.
    :rtype: str
    """
    if not isinstance(datetime_obj, datetime):
        return datetime_obj.isoformat()
    datetime_obj = localize_datetime(datetime_obj, pytz.utc)
    return arrow.get(datetime_obj).format("YYYY-MM-DDTHH:mm:ss.SSS") + "Z"


def localize_datetime(datetime_obj, tz=pytz.utc):
    """Converts a naive or zoned datetime into the provided timezone. Naive datetimes are taken to be UTC.

    :param datetime_obj: The datetime object.
    :type datetime_obj: datetime
    :param tz: The timezone. If blank or None, UTC is used.
    :type tz: datetime.tzinfo
    :rtype: datetime
    """
    if not datetime_obj.tzinfo:
        return pytz.utc.localize(datetime_obj).astimezone(tz)
    return datetime_obj.astimezone(tz)


def elapsed_seconds(start):
    """Seconds elapsed since `start`.

    :param start: A datetime from `utc_now()`.
    :rtype: float
    """
    return (utc_now() - localize_datetime(start)).total_seconds()
